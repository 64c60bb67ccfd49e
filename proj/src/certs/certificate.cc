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

#include "cmms/certificate.h"

#include <fstream>
#include <sstream>

#include "cmms/error.h"

namespace cmms {
namespace {

Json UnsignedJson(const Certificate& cert) {
  Json j = {
      {"serial", cert.serial},
      {"subject_name", cert.subject_name},
      {"kind", SubjectKindName(cert.kind)},
      {"public_key", Base64Encode(cert.public_key)},
      {"state_list", SetToJson(cert.state_list)},
      {"issued_at", cert.issued_at},
      {"expires_at", cert.expires_at},
      {"issuer", cert.issuer},
  };
  j["policy_blob"] =
      cert.policy_blob ? Json(Base64Encode(*cert.policy_blob)) : Json(nullptr);
  return j;
}

void WriteText(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CmmsError(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw CmmsError(ErrorCode::kIo, "write failed for " + path.string());
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CmmsError(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseJson(buf.str());
}

}  // namespace

std::string_view SubjectKindName(SubjectKind kind) {
  switch (kind) {
    case SubjectKind::kUser:
      return "user";
    case SubjectKind::kDiscovery:
      return "discovery";
    case SubjectKind::kService:
      return "service";
  }
  return "user";
}

SubjectKind ParseSubjectKind(std::string_view name) {
  if (name == "user") return SubjectKind::kUser;
  if (name == "discovery") return SubjectKind::kDiscovery;
  if (name == "service") return SubjectKind::kService;
  throw CmmsError(ErrorCode::kSchema, "unknown subject kind '" + std::string(name) + "'");
}

Bytes CanonicalBytes(const Certificate& cert) {
  return ToBytes(CanonicalDump(UnsignedJson(cert)));
}

Json CertificateToJson(const Certificate& cert) {
  Json j = UnsignedJson(cert);
  j["signature"] = Base64Encode(cert.signature);
  return j;
}

Certificate CertificateFromJson(const Json& j) {
  JsonReader r(j, "certificate",
               {"serial", "subject_name", "kind", "public_key", "state_list",
                "policy_blob", "issued_at", "expires_at", "issuer", "signature"});
  Certificate c;
  c.serial = r.Uint("serial");
  c.subject_name = r.String("subject_name");
  c.kind = ParseSubjectKind(r.String("kind"));
  c.public_key = r.Base64("public_key");
  c.state_list = r.Set<StateTag>("state_list");
  if (!r.IsNull("policy_blob")) c.policy_blob = r.Base64("policy_blob");
  c.issued_at = r.Int("issued_at");
  c.expires_at = r.Int("expires_at");
  c.issuer = r.String("issuer");
  c.signature = r.Base64("signature");
  return c;
}

Json CrlToJson(const Crl& crl) {
  Json serials = Json::array();
  for (std::uint64_t s : crl.revoked_serials) serials.push_back(s);
  return Json{{"revoked_serials", serials}, {"issued_at", crl.issued_at}};
}

Crl CrlFromJson(const Json& j) {
  JsonReader r(j, "crl", {"revoked_serials", "issued_at"});
  Crl crl;
  crl.issued_at = r.Int("issued_at");
  const Json& arr = r.Raw("revoked_serials");
  if (!arr.is_array()) {
    throw CmmsError(ErrorCode::kSchema, "crl.revoked_serials: expected array");
  }
  for (const Json& s : arr) {
    if (!s.is_number_unsigned()) {
      throw CmmsError(ErrorCode::kSchema, "crl.revoked_serials: expected unsigned");
    }
    crl.revoked_serials.insert(s.get<std::uint64_t>());
  }
  return crl;
}

std::string_view CertStatusName(CertStatus status) {
  switch (status) {
    case CertStatus::kOk:
      return "Ok";
    case CertStatus::kExpired:
      return "Expired";
    case CertStatus::kBadSignature:
      return "BadSignature";
    case CertStatus::kRevoked:
      return "Revoked";
  }
  return "BadSignature";
}

CertStatus VerifyCertificate(const Certificate& cert, const Signer& signer,
                             std::span<const std::uint8_t> ca_public_key,
                             Tick now, const Crl& crl) {
  if (crl.contains(cert.serial)) return CertStatus::kRevoked;
  if (now >= cert.expires_at) return CertStatus::kExpired;
  if (!signer.Verify(ca_public_key, CanonicalBytes(cert), cert.signature)) {
    return CertStatus::kBadSignature;
  }
  return CertStatus::kOk;
}

void WriteCertificateFile(const Certificate& cert,
                          const std::filesystem::path& path) {
  WriteText(CanonicalDump(CertificateToJson(cert)) + "\n", path);
}

Certificate ReadCertificateFile(const std::filesystem::path& path) {
  return CertificateFromJson(ReadJsonFile(path));
}

void WriteCrlFile(const Crl& crl, const std::filesystem::path& path) {
  WriteText(CanonicalDump(CrlToJson(crl)) + "\n", path);
}

Crl ReadCrlFile(const std::filesystem::path& path) {
  return CrlFromJson(ReadJsonFile(path));
}

}  // namespace cmms
