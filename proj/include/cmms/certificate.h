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

#ifndef CMMS_CERTIFICATE_H_
#define CMMS_CERTIFICATE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "cmms/encoding.h"
#include "cmms/id_set.h"
#include "cmms/json_util.h"
#include "cmms/signer.h"

namespace cmms {

enum class SubjectKind { kUser, kDiscovery, kService };

std::string_view SubjectKindName(SubjectKind kind);
SubjectKind ParseSubjectKind(std::string_view name);  // throws kSchema

// Identity certificate extended with the subject's current state list.
struct Certificate {
  std::uint64_t serial = 0;
  std::string subject_name;
  SubjectKind kind = SubjectKind::kUser;
  Bytes public_key;
  StateSet state_list;
  // Reserved for per-subject policies; never populated here.
  std::optional<Bytes> policy_blob;
  Tick issued_at = 0;
  Tick expires_at = 0;
  std::string issuer;
  Bytes signature;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct Crl {
  std::set<std::uint64_t> revoked_serials;
  Tick issued_at = 0;

  bool contains(std::uint64_t serial) const {
    return revoked_serials.count(serial) != 0;
  }
  friend bool operator==(const Crl&, const Crl&) = default;
};

// Key-sorted compact JSON of every field except the signature.
Bytes CanonicalBytes(const Certificate& cert);

Json CertificateToJson(const Certificate& cert);
Certificate CertificateFromJson(const Json& j);
Json CrlToJson(const Crl& crl);
Crl CrlFromJson(const Json& j);

enum class CertStatus { kOk, kExpired, kBadSignature, kRevoked };
std::string_view CertStatusName(CertStatus status);

// Revoked, then Expired, then BadSignature; Ok only if none apply.
CertStatus VerifyCertificate(const Certificate& cert, const Signer& signer,
                             std::span<const std::uint8_t> ca_public_key,
                             Tick now, const Crl& crl);

// One canonical JSON document plus trailing LF per file.
void WriteCertificateFile(const Certificate& cert,
                          const std::filesystem::path& path);
Certificate ReadCertificateFile(const std::filesystem::path& path);
void WriteCrlFile(const Crl& crl, const std::filesystem::path& path);
Crl ReadCrlFile(const std::filesystem::path& path);

}  // namespace cmms

#endif  // CMMS_CERTIFICATE_H_
