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

#include "cmms/authority.h"

#include "cmms/error.h"

namespace cmms {

CertificateAuthority::CertificateAuthority(std::string name,
                                           std::shared_ptr<const Signer> signer,
                                           KeyPair keys, int state_universe)
    : name_(std::move(name)),
      signer_(std::move(signer)),
      keys_(std::move(keys)),
      state_universe_(state_universe) {}

void CertificateAuthority::CheckStates(const StateSet& states) const {
  if (!states.WithinUniverse(state_universe_)) {
    throw CmmsError(ErrorCode::kRange,
                    "states " + states.ToString() + " outside 1.." +
                        std::to_string(state_universe_));
  }
}

Certificate CertificateAuthority::Sign(Certificate cert) const {
  cert.signature = signer_->Sign(keys_.private_key, CanonicalBytes(cert));
  return cert;
}

Certificate CertificateAuthority::Issue(const std::string& subject_name,
                                        SubjectKind kind, const Bytes& public_key,
                                        const StateSet& state_list, Tick now,
                                        Tick validity_ticks) {
  if (subject_name.empty()) {
    throw CmmsError(ErrorCode::kConfig, "subject name must be nonempty");
  }
  if (validity_ticks <= 0) {
    throw CmmsError(ErrorCode::kConfig, "validity must be positive");
  }
  CheckStates(state_list);
  if (current_.count(subject_name)) {
    throw CmmsError(ErrorCode::kDuplicateSubject,
                    "'" + subject_name + "' already holds a certificate");
  }
  Certificate cert;
  cert.serial = next_serial_++;
  cert.subject_name = subject_name;
  cert.kind = kind;
  cert.public_key = public_key;
  cert.state_list = state_list;
  cert.issued_at = now;
  cert.expires_at = now + validity_ticks;
  cert.issuer = name_;
  cert = Sign(std::move(cert));
  current_[subject_name] = cert;
  return cert;
}

std::pair<Certificate, Crl> CertificateAuthority::Reissue(
    const Certificate& old_cert, const StateSet& new_states, Tick now,
    Tick validity_ticks) {
  auto it = current_.find(old_cert.subject_name);
  if (it == current_.end() || it->second.serial != old_cert.serial) {
    throw CmmsError(ErrorCode::kUnknownSubject,
                    "no current certificate " + std::to_string(old_cert.serial) +
                        " for '" + old_cert.subject_name + "'");
  }
  if (validity_ticks <= 0) {
    throw CmmsError(ErrorCode::kConfig, "validity must be positive");
  }
  CheckStates(new_states);

  Certificate next = it->second;
  next.serial = next_serial_++;
  next.state_list = new_states;
  next.issued_at = now;
  next.expires_at = now + validity_ticks;
  next = Sign(std::move(next));

  crl_.revoked_serials.insert(old_cert.serial);
  crl_.issued_at = now;
  it->second = next;
  return {next, crl_};
}

Crl CertificateAuthority::Revoke(const std::string& subject_name, Tick now) {
  auto it = current_.find(subject_name);
  if (it == current_.end()) {
    throw CmmsError(ErrorCode::kUnknownSubject,
                    "'" + subject_name + "' holds no certificate");
  }
  crl_.revoked_serials.insert(it->second.serial);
  crl_.issued_at = now;
  current_.erase(it);
  return crl_;
}

std::optional<Certificate> CertificateAuthority::Current(
    const std::string& subject_name) const {
  auto it = current_.find(subject_name);
  if (it == current_.end()) return std::nullopt;
  return it->second;
}

Json CertificateAuthority::Snapshot() const {
  Json subjects = Json::object();
  for (const auto& [name, cert] : current_) subjects[name] = cert.serial;
  return Json{{"next_serial", next_serial_},
              {"crl", CrlToJson(crl_)},
              {"current", subjects}};
}

CertRepository::CertRepository(std::shared_ptr<const Signer> signer,
                               Bytes ca_public_key)
    : signer_(std::move(signer)), ca_public_key_(std::move(ca_public_key)) {}

void CertRepository::StoreCert(const Certificate& cert, Tick now) {
  const CertStatus status =
      VerifyCertificate(cert, *signer_, ca_public_key_, now, crl_);
  if (status != CertStatus::kOk) {
    throw CmmsError(ErrorCode::kInvalidCert,
                    "certificate " + std::to_string(cert.serial) + " is " +
                        std::string(CertStatusName(status)));
  }
  certs_[cert.subject_name][cert.serial] = cert;
}

const Certificate& CertRepository::GetCert(const std::string& subject_name) const {
  auto it = certs_.find(subject_name);
  if (it == certs_.end() || it->second.empty()) {
    throw CmmsError(ErrorCode::kNotFound, "no certificate for '" + subject_name + "'");
  }
  return it->second.rbegin()->second;
}

void CertRepository::MergeCrl(const Crl& crl) {
  crl_.revoked_serials.insert(crl.revoked_serials.begin(),
                              crl.revoked_serials.end());
  crl_.issued_at = std::max(crl_.issued_at, crl.issued_at);
}

Json CertRepository::Snapshot() const {
  Json subjects = Json::object();
  for (const auto& [name, by_serial] : certs_) {
    Json serials = Json::array();
    for (const auto& [serial, cert] : by_serial) serials.push_back(serial);
    subjects[name] = serials;
  }
  return Json{{"certs", subjects}, {"crl", CrlToJson(crl_)}};
}

}  // namespace cmms
