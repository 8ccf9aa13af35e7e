#pragma once

#include <cstdint>
#include <string_view>

#include "tonopah/sim/units.hpp"

namespace tonopah::sim {

using FlowId = std::uint32_t;

inline constexpr ByteCount kDataPacketBytes = 1500;
inline constexpr ByteCount kAckPacketBytes = 40;

enum class SubflowRole : std::uint8_t { None, Dominant, NonDominant };

constexpr std::string_view to_string(SubflowRole r) {
  switch (r) {
    case SubflowRole::Dominant: return "dominant";
    case SubflowRole::NonDominant: return "non-dominant";
    case SubflowRole::None: break;
  }
  return "none";
}

struct Packet {
  FlowId flow_id = 0;
  SubflowRole subflow = SubflowRole::None;
  bool is_ack = false;
  bool is_retransmit = false;
  ByteCount size_bytes = kDataPacketBytes;

  // Data fields.
  std::uint64_t seq = 0;    // per-subflow sequence number
  std::uint64_t dsn = 0;    // connection-level data sequence number
  std::uint64_t tx_id = 0;  // per-connection transmission counter
  SimTime sent_at{0};
  SimTime enqueued_at{0};  // set by the bottleneck qdisc on arrival

  // Ack payload. `subflow` names the acknowledged subflow.
  std::uint64_t cum_ack = 0;    // next expected seq on that subflow
  std::uint64_t acked_seq = 0;  // seq of the data packet that triggered the ack
  SimTime echo_sent_at{0};
  std::uint64_t echo_tx_id = 0;
  bool echo_retransmit = false;
};

}  // namespace tonopah::sim
