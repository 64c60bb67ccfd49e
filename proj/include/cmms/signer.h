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

#ifndef CMMS_SIGNER_H_
#define CMMS_SIGNER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

#include "cmms/encoding.h"

namespace cmms {

struct KeyPair {
  Bytes private_key;
  Bytes public_key;
  friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

// Signature scheme used for certificates, tickets and authentication proofs.
class Signer {
 public:
  virtual ~Signer() = default;

  virtual std::string_view name() const = 0;

  // Deterministic key generation from a 32-byte seed.
  virtual KeyPair Generate(std::span<const std::uint8_t> seed) const = 0;
  // Fresh key pair from the system CSPRNG.
  KeyPair Generate() const;

  virtual Bytes Sign(std::span<const std::uint8_t> private_key,
                     std::span<const std::uint8_t> message) const = 0;
  virtual bool Verify(std::span<const std::uint8_t> public_key,
                      std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> signature) const = 0;
};

// "ed25519" (OpenSSL) or "test-sha256", an insecure deterministic double
// whose signature is SHA-256(public key || message). Throws kConfig for any
// other name.
std::shared_ptr<const Signer> MakeSigner(std::string_view name);

// 32-byte key seed derived from a deployment seed and a label such as a
// node address.
Bytes DeriveKeySeed(std::uint64_t seed, std::string_view label);

}  // namespace cmms

#endif  // CMMS_SIGNER_H_
