#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "gfl/codec.hpp"

namespace gfl::fedrt {

// Per-kind message tallies, one slot per client, for protocol accounting.
struct MessageStats {
  // indexed [kind-1][client]
  std::array<std::vector<std::uint64_t>, 4> uploads;
  std::array<std::vector<std::uint64_t>, 4> downloads;

  void resize(std::size_t n) {
    for (auto& v : uploads) v.assign(n, 0);
    for (auto& v : downloads) v.assign(n, 0);
  }
};

// Moves messages between the clients and the server. `collect` carries one
// message per sending client (client_id = sender) and returns them on the
// server side in the submitted order; `deliver` carries {recipient, message}
// pairs and returns what each recipient received, in the submitted order.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::vector<RoundMessage> collect(
      std::vector<RoundMessage> uploads) = 0;
  virtual std::vector<RoundMessage> deliver(
      std::vector<std::pair<std::uint32_t, RoundMessage>> downloads) = 0;

  const MessageStats& stats() const { return stats_; }

 protected:
  void note_upload(const RoundMessage& m) {
    bump(stats_.uploads, static_cast<std::size_t>(m.kind) - 1, m.client_id);
  }
  void note_download(std::uint32_t recipient, const RoundMessage& m) {
    bump(stats_.downloads, static_cast<std::size_t>(m.kind) - 1, recipient);
  }

 private:
  void bump(std::array<std::vector<std::uint64_t>, 4>& table, std::size_t kind,
            std::uint32_t client) {
    auto& v = table[kind];
    if (client >= v.size()) v.resize(client + 1, 0);
    ++v[client];
  }

  MessageStats stats_;
};

// Ordered in-process channels; payloads move without copies.
class InprocTransport : public Transport {
 public:
  std::vector<RoundMessage> collect(std::vector<RoundMessage> uploads) override;
  std::vector<RoundMessage> deliver(
      std::vector<std::pair<std::uint32_t, RoundMessage>> downloads) override;
};

// Byte-stream transport over AF_UNIX socket pairs: every message is framed
// with encode_message, written to the client end and read back on the server
// end (and vice versa). A writer thread drains the submitting side so frames
// larger than the kernel buffer cannot deadlock the exchange.
class SocketTransport : public Transport {
 public:
  explicit SocketTransport(std::size_t num_clients);
  ~SocketTransport() override;

  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  std::vector<RoundMessage> collect(std::vector<RoundMessage> uploads) override;
  std::vector<RoundMessage> deliver(
      std::vector<std::pair<std::uint32_t, RoundMessage>> downloads) override;

 private:
  std::vector<int> client_fd_;
  std::vector<int> server_fd_;
};

}  // namespace gfl::fedrt
