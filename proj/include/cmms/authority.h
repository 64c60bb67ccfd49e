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

#ifndef CMMS_AUTHORITY_H_
#define CMMS_AUTHORITY_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "cmms/certificate.h"
#include "cmms/json_util.h"
#include "cmms/signer.h"

namespace cmms {

// Issues and rotates state-carrying certificates. Serials start at 1 and
// strictly increase; the CRL only ever grows.
class CertificateAuthority {
 public:
  CertificateAuthority(std::string name, std::shared_ptr<const Signer> signer,
                       KeyPair keys, int state_universe);

  const std::string& name() const { return name_; }
  const Bytes& public_key() const { return keys_.public_key; }
  const Signer& signer() const { return *signer_; }
  const Crl& crl() const { return crl_; }
  std::uint64_t last_serial() const { return next_serial_ - 1; }

  // Throws kDuplicateSubject while the subject holds a non-revoked
  // certificate, kConfig for an empty name or non-positive validity and
  // kRange for states outside the grid.
  Certificate Issue(const std::string& subject_name, SubjectKind kind,
                    const Bytes& public_key, const StateSet& state_list,
                    Tick now, Tick validity_ticks);

  // New serial carrying new_states; the old serial enters the CRL even when
  // the states are unchanged. Throws kUnknownSubject unless old_cert is the
  // subject's current certificate from this CA.
  std::pair<Certificate, Crl> Reissue(const Certificate& old_cert,
                                      const StateSet& new_states, Tick now,
                                      Tick validity_ticks);

  // Revokes the subject's current certificate without a replacement.
  Crl Revoke(const std::string& subject_name, Tick now);

  std::optional<Certificate> Current(const std::string& subject_name) const;

  Json Snapshot() const;

 private:
  Certificate Sign(Certificate cert) const;
  void CheckStates(const StateSet& states) const;

  std::string name_;
  std::shared_ptr<const Signer> signer_;
  KeyPair keys_;
  int state_universe_;
  std::uint64_t next_serial_ = 1;
  Crl crl_;
  std::map<std::string, Certificate> current_;
};

// Latest certificate per subject plus the CRL.
class CertRepository {
 public:
  CertRepository(std::shared_ptr<const Signer> signer, Bytes ca_public_key);

  // Throws kInvalidCert unless the certificate verifies Ok at `now`.
  void StoreCert(const Certificate& cert, Tick now);
  // Highest stored serial for the subject; throws kNotFound.
  const Certificate& GetCert(const std::string& subject_name) const;
  const Crl& GetCrl() const { return crl_; }
  // Merges by union so revocations are never lost.
  void MergeCrl(const Crl& crl);

  Json Snapshot() const;

 private:
  std::shared_ptr<const Signer> signer_;
  Bytes ca_public_key_;
  std::map<std::string, std::map<std::uint64_t, Certificate>> certs_;
  Crl crl_;
};

}  // namespace cmms

#endif  // CMMS_AUTHORITY_H_
