// Copyright 2026 The CMMS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmms/signer.h"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>

#include "cmms/error.h"

namespace cmms {
namespace {

constexpr std::size_t kSeedSize = 32;

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

class Ed25519Signer final : public Signer {
 public:
  std::string_view name() const override { return "ed25519"; }

  KeyPair Generate(std::span<const std::uint8_t> seed) const override {
    if (seed.size() != kSeedSize) {
      throw CmmsError(ErrorCode::kConfig, "ed25519 seed must be 32 bytes");
    }
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                             seed.data(), seed.size()));
    if (!key) throw CmmsError(ErrorCode::kConfig, "ed25519 key generation failed");
    KeyPair kp;
    kp.private_key.assign(seed.begin(), seed.end());
    std::size_t len = 32;
    kp.public_key.resize(len);
    if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_key.data(), &len) != 1) {
      throw CmmsError(ErrorCode::kConfig, "ed25519 public key export failed");
    }
    kp.public_key.resize(len);
    return kp;
  }

  Bytes Sign(std::span<const std::uint8_t> private_key,
             std::span<const std::uint8_t> message) const override {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                             private_key.data(),
                                             private_key.size()));
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!key || !ctx ||
        EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
      throw CmmsError(ErrorCode::kAuth, "invalid ed25519 private key");
    }
    std::size_t len = 64;
    Bytes sig(len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(),
                       message.size()) != 1) {
      throw CmmsError(ErrorCode::kAuth, "ed25519 signing failed");
    }
    sig.resize(len);
    return sig;
  }

  bool Verify(std::span<const std::uint8_t> public_key,
              std::span<const std::uint8_t> message,
              std::span<const std::uint8_t> signature) const override {
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                            public_key.data(), public_key.size()));
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!key || !ctx ||
        EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
      return false;
    }
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            message.data(), message.size()) == 1;
  }
};

// Not a signature scheme: anyone holding the public key can "sign". Used
// only where golden fixtures must not depend on a real algorithm.
class TestSigner final : public Signer {
 public:
  std::string_view name() const override { return "test-sha256"; }

  KeyPair Generate(std::span<const std::uint8_t> seed) const override {
    KeyPair kp;
    kp.private_key.assign(seed.begin(), seed.end());
    kp.public_key = PublicFromPrivate(kp.private_key);
    return kp;
  }

  Bytes Sign(std::span<const std::uint8_t> private_key,
             std::span<const std::uint8_t> message) const override {
    return Digest(PublicFromPrivate(private_key), message);
  }

  bool Verify(std::span<const std::uint8_t> public_key,
              std::span<const std::uint8_t> message,
              std::span<const std::uint8_t> signature) const override {
    const Bytes expected = Digest(public_key, message);
    return std::equal(expected.begin(), expected.end(), signature.begin(),
                      signature.end());
  }

 private:
  static Bytes PublicFromPrivate(std::span<const std::uint8_t> priv) {
    Bytes buf = ToBytes("test-sha256-public:");
    buf.insert(buf.end(), priv.begin(), priv.end());
    return Sha256(buf);
  }

  static Bytes Digest(std::span<const std::uint8_t> pub,
                      std::span<const std::uint8_t> message) {
    Bytes buf(pub.begin(), pub.end());
    buf.insert(buf.end(), message.begin(), message.end());
    return Sha256(buf);
  }
};

}  // namespace

KeyPair Signer::Generate() const {
  Bytes seed(kSeedSize);
  if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1) {
    throw CmmsError(ErrorCode::kConfig, "system RNG unavailable");
  }
  return Generate(seed);
}

std::shared_ptr<const Signer> MakeSigner(std::string_view name) {
  if (name == "ed25519") return std::make_shared<Ed25519Signer>();
  if (name == "test-sha256") return std::make_shared<TestSigner>();
  throw CmmsError(ErrorCode::kConfig, "unknown signer '" + std::string(name) + "'");
}

Bytes DeriveKeySeed(std::uint64_t seed, std::string_view label) {
  Bytes buf = ToBytes("cmms-key-seed:");
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  }
  buf.push_back(':');
  buf.insert(buf.end(), label.begin(), label.end());
  return Sha256(buf);
}

}  // namespace cmms
