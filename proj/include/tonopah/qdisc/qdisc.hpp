#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "tonopah/qdisc/codel.hpp"
#include "tonopah/sim/packet.hpp"

namespace tonopah::qdisc {

using sim::Packet;

enum class QdiscKind { DropTail, FqDrr, FqCodel };

/// Linux-style names: pfifo, fq, fq_codel.
std::string_view to_string(QdiscKind k);
std::optional<QdiscKind> parse_qdisc_kind(std::string_view name);

struct QdiscConfig {
  QdiscKind kind = QdiscKind::DropTail;
  /// DropTail: whole queue. FqDrr: per flow queue. Unused by FqCodel.
  std::size_t buffer_packets = 100;
  ByteCount quantum_bytes = 1514;
  SimTime codel_target = std::chrono::milliseconds(5);
  SimTime codel_interval = std::chrono::milliseconds(100);
  std::size_t fq_codel_limit_packets = 10240;
};

/// Throws std::invalid_argument when the config violates its invariants.
void validate(const QdiscConfig& cfg);

enum class EnqueueResult { Accepted, Dropped };

/// Flow classification key: the Tonopah subflows of one flow land in
/// different queues.
struct FlowKey {
  sim::FlowId flow_id = 0;
  sim::SubflowRole subflow = sim::SubflowRole::None;
  friend bool operator==(const FlowKey&, const FlowKey&) = default;
};

inline FlowKey flow_key(const Packet& p) { return {p.flow_id, p.subflow}; }

class Qdisc {
 public:
  using DropHandler = std::function<void(const Packet&)>;

  virtual ~Qdisc() = default;

  /// Stamps `pkt.enqueued_at = now`. Every dropped packet (the arriving one
  /// or a victim evicted to make room) is reported to the drop handler.
  virtual EnqueueResult enqueue(Packet pkt, SimTime now) = 0;
  virtual std::optional<Packet> dequeue(SimTime now) = 0;

  virtual std::size_t packet_count() const = 0;
  virtual ByteCount byte_count() const = 0;
  bool empty() const { return packet_count() == 0; }

  void set_drop_handler(DropHandler h) { on_drop_ = std::move(h); }

 protected:
  void report_drop(const Packet& p) {
    if (on_drop_) on_drop_(p);
  }

 private:
  DropHandler on_drop_;
};

std::unique_ptr<Qdisc> make_qdisc(const QdiscConfig& cfg);

}  // namespace tonopah::qdisc
