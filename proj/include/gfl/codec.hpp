#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gfl/encoder.hpp"

namespace gfl::fedrt {

enum class MessageKind : std::uint8_t {
  model_upload = 1,
  model_broadcast = 2,
  hidden_upload = 3,
  agg_broadcast = 4,
};

constexpr std::uint32_t kBroadcastId = 0xFFFFFFFFu;

// Tagged protocol message. The kind fixes the payload schema:
// model_upload/model_broadcast carry ModelParams, hidden_upload carries a
// HiddenPacket, agg_broadcast an AggregatedContext.
struct RoundMessage {
  MessageKind kind = MessageKind::model_upload;
  std::uint32_t round = 0;
  std::uint32_t client_id = kBroadcastId;  // kBroadcastId for broadcasts
  std::variant<encoder::ModelParams, encoder::HiddenPacket,
               encoder::AggregatedContext>
      payload;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Frame: u32 length of everything after the length field, u8 kind tag,
// u32 round, u32 client id, payload bytes. All integers little-endian,
// all floats IEEE-754 binary64 little-endian.
std::vector<std::uint8_t> encode_message(const RoundMessage& m);

// Decodes exactly one frame; the buffer must contain the whole frame and
// nothing else.
RoundMessage decode_message(std::span<const std::uint8_t> bytes);

// Checkpoint file: 8-byte magic "GFLCKPT1", u64 round, then the ModelParams
// serialization.
void write_checkpoint(const std::string& path, std::uint64_t round,
                      const encoder::ModelParams& params);
std::pair<std::uint64_t, encoder::ModelParams> read_checkpoint(
    const std::string& path);

}  // namespace gfl::fedrt
