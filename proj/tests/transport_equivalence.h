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

#ifndef CMMS_TESTS_TRANSPORT_EQUIVALENCE_H_
#define CMMS_TESTS_TRANSPORT_EQUIVALENCE_H_

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cmms/simnet.h"

namespace cmms::testing {

// First link whose masked envelope sequence differs, or empty.
inline std::string FirstLinkMismatch(const std::vector<Envelope>& a,
                                     const std::vector<Envelope>& b) {
  std::set<std::pair<std::string, std::string>> links;
  for (const auto& e : a) links.insert({e.sender, e.recipient});
  for (const auto& e : b) links.insert({e.sender, e.recipient});
  for (const auto& [from, to] : links) {
    const auto x = ProjectLink(a, from, to);
    const auto y = ProjectLink(b, from, to);
    if (x.size() != y.size()) {
      return from + "->" + to + ": " + std::to_string(x.size()) + " vs " +
             std::to_string(y.size()) + " envelopes";
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (MaskTimeDerived(x[i]) != MaskTimeDerived(y[i])) {
        return from + "->" + to + " #" + std::to_string(i) + ": " +
               CanonicalDump(MaskTimeDerived(x[i])) + " vs " +
               CanonicalDump(MaskTimeDerived(y[i]));
      }
    }
  }
  return "";
}

inline std::vector<Envelope> Envelopes(const Trace& t) {
  std::vector<Envelope> out;
  for (const auto& e : t.entries) out.push_back(e.envelope);
  return out;
}

}  // namespace cmms::testing

#endif  // CMMS_TESTS_TRANSPORT_EQUIVALENCE_H_
