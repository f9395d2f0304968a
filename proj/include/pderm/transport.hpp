#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pderm {

// Wire protocol, little-endian:
//   [u32 magic 0xC0C0A000][u32 round][u32 machine-id][u64 payload-len]
//   [payload-len doubles]
// Workers send their delta-v (and, on measured rounds, their alpha block);
// the coordinator replies with the same frame shape carrying the next shared
// vector. round == 0xFFFFFFFF tells workers to stop.
inline constexpr std::uint32_t kFrameMagic = 0xC0C0A000u;
inline constexpr std::uint32_t kStopRound = 0xFFFFFFFFu;
inline constexpr std::int64_t kFrameHeaderBytes = 20;

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

struct Frame {
    std::uint32_t round = 0;
    std::uint32_t machine_id = 0;
    std::vector<double> payload;
};

// Blocking framed I/O over a connected socket.
void write_frame(int fd, const Frame& frame);
Frame read_frame(int fd);

// "host:port" (":port" binds/connects on all interfaces / localhost).
class TcpListener {
  public:
    explicit TcpListener(const std::string& addr, int backlog);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    int accept_connection();
    int port() const { return port_; }

  private:
    int fd_ = -1;
    int port_ = 0;
};

int tcp_connect(const std::string& addr);
void close_socket(int fd);
// shutdown(SHUT_WR), discard whatever the peer is still sending, then close
void drain_and_close(int fd);

}  // namespace pderm
