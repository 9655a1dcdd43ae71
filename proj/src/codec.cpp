#include "gfl/codec.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace gfl::fedrt {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t off = 0;

  bool have(std::size_t n) const { return bytes.size() - off >= n; }

  std::uint32_t u32() {
    if (!have(4)) throw DecodeError("decode: truncated payload");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[off + static_cast<std::size_t>(i)];
    off += 4;
    return v;
  }

  std::uint64_t u64() {
    if (!have(8)) throw DecodeError("decode: truncated payload");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[off + static_cast<std::size_t>(i)];
    off += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }
};

void encode_packet_body(std::vector<std::uint8_t>& out,
                        std::span<const double> h,
                        const numkit::DenseMatrix& jac) {
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  put_u32(out, static_cast<std::uint32_t>(jac.cols));
  for (double v : h) put_f64(out, v);
  for (double v : jac.data) put_f64(out, v);
}

void decode_packet_body(Reader& r, std::vector<double>& h,
                        numkit::DenseMatrix& jac) {
  const std::size_t c = r.u32();
  const std::size_t flat = r.u32();
  h.resize(c);
  for (double& v : h) v = r.f64();
  jac = numkit::DenseMatrix(c, flat);
  for (double& v : jac.data) v = r.f64();
}

}  // namespace

std::vector<std::uint8_t> encode_message(const RoundMessage& m) {
  std::vector<std::uint8_t> body;
  body.push_back(static_cast<std::uint8_t>(m.kind));
  put_u32(body, m.round);
  put_u32(body, m.client_id);

  switch (m.kind) {
    case MessageKind::model_upload:
    case MessageKind::model_broadcast: {
      const auto* w = std::get_if<encoder::ModelParams>(&m.payload);
      if (!w) throw std::logic_error("encode: kind/payload mismatch");
      auto bytes = encoder::serialize_params(*w);
      body.insert(body.end(), bytes.begin(), bytes.end());
      break;
    }
    case MessageKind::hidden_upload: {
      const auto* pkt = std::get_if<encoder::HiddenPacket>(&m.payload);
      if (!pkt) throw std::logic_error("encode: kind/payload mismatch");
      encode_packet_body(body, pkt->h, pkt->jac);
      break;
    }
    case MessageKind::agg_broadcast: {
      const auto* ctx = std::get_if<encoder::AggregatedContext>(&m.payload);
      if (!ctx) throw std::logic_error("encode: kind/payload mismatch");
      encode_packet_body(body, ctx->c_vec, ctx->c_jac);
      break;
    }
    default:
      throw std::logic_error("encode: unknown kind");
  }

  std::vector<std::uint8_t> out;
  out.reserve(4 + body.size());
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

RoundMessage decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw DecodeError("decode: incomplete frame");
  Reader header{bytes, 0};
  const std::uint32_t length = header.u32();
  if (bytes.size() - 4 < length) throw DecodeError("decode: incomplete frame");
  if (bytes.size() - 4 != length) throw DecodeError("decode: length mismatch");
  if (length < 9) throw DecodeError("decode: incomplete frame");

  Reader r{bytes.subspan(4), 0};
  const std::uint8_t tag = r.bytes[r.off++];
  if (tag < 1 || tag > 4) throw DecodeError("decode: unknown kind tag");

  RoundMessage m;
  m.kind = static_cast<MessageKind>(tag);
  m.round = r.u32();
  m.client_id = r.u32();

  switch (m.kind) {
    case MessageKind::model_upload:
    case MessageKind::model_broadcast: {
      m.payload = encoder::deserialize_params(r.bytes.subspan(r.off));
      r.off = r.bytes.size();
      break;
    }
    case MessageKind::hidden_upload: {
      encoder::HiddenPacket pkt;
      decode_packet_body(r, pkt.h, pkt.jac);
      m.payload = std::move(pkt);
      break;
    }
    case MessageKind::agg_broadcast: {
      encoder::AggregatedContext ctx;
      decode_packet_body(r, ctx.c_vec, ctx.c_jac);
      m.payload = std::move(ctx);
      break;
    }
  }
  if (r.off != r.bytes.size()) throw DecodeError("decode: length mismatch");
  return m;
}

void write_checkpoint(const std::string& path, std::uint64_t round,
                      const encoder::ModelParams& params) {
  std::vector<std::uint8_t> out;
  const char magic[8] = {'G', 'F', 'L', 'C', 'K', 'P', 'T', '1'};
  out.insert(out.end(), magic, magic + 8);
  put_u64(out, round);
  auto body = encoder::serialize_params(params);
  out.insert(out.end(), body.begin(), body.end());

  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path);
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("failed writing " + path);
}

std::pair<std::uint64_t, encoder::ModelParams> read_checkpoint(
    const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "GFLCKPT1", 8) != 0) {
    throw std::runtime_error(path + ": not a checkpoint file");
  }
  Reader r{std::span<const std::uint8_t>(bytes).subspan(8), 0};
  const std::uint64_t round = r.u64();
  auto params =
      encoder::deserialize_params(r.bytes.subspan(r.off));
  return {round, std::move(params)};
}

}  // namespace gfl::fedrt
