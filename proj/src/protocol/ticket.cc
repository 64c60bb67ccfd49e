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

#include "cmms/ticket.h"

#include "cmms/json_util.h"

namespace cmms {

Bytes CanonicalTicketBytes(const Ticket& ticket) {
  Json j = TicketToJson(ticket);
  j.erase("discovery_signature");
  return ToBytes(CanonicalDump(j));
}

Ticket SignTicket(Ticket ticket, const Signer& signer,
                  std::span<const std::uint8_t> discovery_private_key) {
  ticket.discovery_signature =
      signer.Sign(discovery_private_key, CanonicalTicketBytes(ticket));
  return ticket;
}

std::string_view TicketStatusName(TicketStatus status) {
  switch (status) {
    case TicketStatus::kOk:
      return "Ok";
    case TicketStatus::kExpired:
      return "Expired";
    case TicketStatus::kBadSignature:
      return "BadSignature";
  }
  return "BadSignature";
}

TicketStatus ValidateTicket(const Ticket& ticket, const Signer& signer,
                            std::span<const std::uint8_t> discovery_public_key,
                            Tick now) {
  if (!signer.Verify(discovery_public_key, CanonicalTicketBytes(ticket),
                     ticket.discovery_signature)) {
    return TicketStatus::kBadSignature;
  }
  if (now >= ticket.issued_at + ticket.ttl_ticks) return TicketStatus::kExpired;
  return TicketStatus::kOk;
}

Bytes AuthProofBytes(std::string_view user, Tick timestamp,
                     std::string_view recipient) {
  const Json j = {{"recipient", recipient}, {"timestamp", timestamp}, {"user", user}};
  return ToBytes(CanonicalDump(j));
}

Bytes ForwardProofBytes(const Ticket& ticket, const StateSet& effective_states,
                        std::string_view origin_node, int service_id) {
  const Json j = {{"ticket", TicketToJson(ticket)},
                  {"effective_states", SetToJson(effective_states)},
                  {"origin_node", origin_node},
                  {"service_id", service_id}};
  return ToBytes(CanonicalDump(j));
}

}  // namespace cmms
