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

#ifndef CMMS_TICKET_H_
#define CMMS_TICKET_H_

#include <span>
#include <string>
#include <string_view>

#include "cmms/envelope.h"
#include "cmms/signer.h"

namespace cmms {

inline constexpr Tick kDefaultTicketTtl = 100;
inline constexpr Tick kDefaultReplayWindow = 50;
inline constexpr Tick kDefaultHoldWindow = 10;

// Every ticket field except the signature, canonical JSON.
Bytes CanonicalTicketBytes(const Ticket& ticket);
Ticket SignTicket(Ticket ticket, const Signer& signer,
                  std::span<const std::uint8_t> discovery_private_key);

enum class TicketStatus { kOk, kExpired, kBadSignature };
std::string_view TicketStatusName(TicketStatus status);

// BadSignature takes precedence over Expired. A ticket is valid strictly
// before issued_at + ttl_ticks.
TicketStatus ValidateTicket(const Ticket& ticket, const Signer& signer,
                            std::span<const std::uint8_t> discovery_public_key,
                            Tick now);

// Bytes a user signs inside GET_NODE.
Bytes AuthProofBytes(std::string_view user, Tick timestamp,
                     std::string_view recipient);

// Bytes a forwarding service node signs inside FORWARD_REQ.
Bytes ForwardProofBytes(const Ticket& ticket, const StateSet& effective_states,
                        std::string_view origin_node, int service_id);

}  // namespace cmms

#endif  // CMMS_TICKET_H_
