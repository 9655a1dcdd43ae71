#include "gfl/transport.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace gfl::fedrt {

std::vector<RoundMessage> InprocTransport::collect(
    std::vector<RoundMessage> uploads) {
  for (const RoundMessage& m : uploads) note_upload(m);
  return uploads;
}

std::vector<RoundMessage> InprocTransport::deliver(
    std::vector<std::pair<std::uint32_t, RoundMessage>> downloads) {
  std::vector<RoundMessage> out;
  out.reserve(downloads.size());
  for (auto& [recipient, msg] : downloads) {
    note_download(recipient, msg);
    out.push_back(std::move(msg));
  }
  return out;
}

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::write(fd, data, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("socket write: ") +
                               std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

void read_all(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::read(fd, data, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("socket read: ") +
                               std::strerror(errno));
    }
    if (n == 0) throw std::runtime_error("socket read: peer closed");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

RoundMessage read_frame(int fd) {
  std::uint8_t head[4];
  read_all(fd, head, 4);
  const std::uint32_t length = static_cast<std::uint32_t>(head[0]) |
                               static_cast<std::uint32_t>(head[1]) << 8 |
                               static_cast<std::uint32_t>(head[2]) << 16 |
                               static_cast<std::uint32_t>(head[3]) << 24;
  std::vector<std::uint8_t> frame(4 + length);
  std::memcpy(frame.data(), head, 4);
  read_all(fd, frame.data() + 4, length);
  return decode_message(frame);
}

}  // namespace

SocketTransport::SocketTransport(std::size_t num_clients) {
  client_fd_.resize(num_clients, -1);
  server_fd_.resize(num_clients, -1);
  for (std::size_t i = 0; i < num_clients; ++i) {
    int pair[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, pair) != 0) {
      throw std::runtime_error(std::string("socketpair: ") +
                               std::strerror(errno));
    }
    client_fd_[i] = pair[0];
    server_fd_[i] = pair[1];
  }
}

SocketTransport::~SocketTransport() {
  for (int fd : client_fd_) {
    if (fd >= 0) ::close(fd);
  }
  for (int fd : server_fd_) {
    if (fd >= 0) ::close(fd);
  }
}

std::vector<RoundMessage> SocketTransport::collect(
    std::vector<RoundMessage> uploads) {
  for (const RoundMessage& m : uploads) {
    if (m.client_id >= client_fd_.size()) {
      throw std::runtime_error("socket transport: unknown sender");
    }
    note_upload(m);
  }
  std::thread writer([&] {
    for (const RoundMessage& m : uploads) {
      auto bytes = encode_message(m);
      write_all(client_fd_[m.client_id], bytes.data(), bytes.size());
    }
  });
  std::vector<RoundMessage> received;
  received.reserve(uploads.size());
  for (const RoundMessage& m : uploads) {
    received.push_back(read_frame(server_fd_[m.client_id]));
  }
  writer.join();
  return received;
}

std::vector<RoundMessage> SocketTransport::deliver(
    std::vector<std::pair<std::uint32_t, RoundMessage>> downloads) {
  for (const auto& [recipient, msg] : downloads) {
    if (recipient >= server_fd_.size()) {
      throw std::runtime_error("socket transport: unknown recipient");
    }
    note_download(recipient, msg);
  }
  std::thread writer([&] {
    for (const auto& [recipient, msg] : downloads) {
      auto bytes = encode_message(msg);
      write_all(server_fd_[recipient], bytes.data(), bytes.size());
    }
  });
  std::vector<RoundMessage> received;
  received.reserve(downloads.size());
  for (const auto& [recipient, msg] : downloads) {
    received.push_back(read_frame(client_fd_[recipient]));
  }
  writer.join();
  return received;
}

}  // namespace gfl::fedrt
