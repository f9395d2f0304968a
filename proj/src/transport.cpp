#include "pderm/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <csignal>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

namespace pderm {

static_assert(std::endian::native == std::endian::little,
              "wire protocol assumes a little-endian host");

namespace {

void write_all(int fd, const void* buf, std::size_t len) {
    const char* p = static_cast<const char*>(buf);
    while (len > 0) {
        const ssize_t w = ::write(fd, p, len);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("write: ") + std::strerror(errno));
        }
        if (w == 0) throw TransportError("write: connection closed");
        p += w;
        len -= std::size_t(w);
    }
}

void read_all(int fd, void* buf, std::size_t len) {
    char* p = static_cast<char*>(buf);
    while (len > 0) {
        const ssize_t r = ::read(fd, p, len);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("read: ") + std::strerror(errno));
        }
        if (r == 0) throw TransportError("read: connection closed mid-frame");
        p += r;
        len -= std::size_t(r);
    }
}

// a peer that already left must surface as a write error, not SIGPIPE
void ignore_sigpipe() {
    static const bool once = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

struct Addr {
    std::string host;
    int port;
};

Addr parse_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw TransportError("address must be host:port");
    Addr a;
    a.host = addr.substr(0, colon);
    try {
        a.port = std::stoi(addr.substr(colon + 1));
    } catch (...) {
        throw TransportError("bad port in address: " + addr);
    }
    return a;
}

}  // namespace

void write_frame(int fd, const Frame& frame) {
    unsigned char header[kFrameHeaderBytes];
    const std::uint64_t len = frame.payload.size();
    std::memcpy(header, &kFrameMagic, 4);
    std::memcpy(header + 4, &frame.round, 4);
    std::memcpy(header + 8, &frame.machine_id, 4);
    std::memcpy(header + 12, &len, 8);
    write_all(fd, header, sizeof header);
    if (len > 0) write_all(fd, frame.payload.data(), len * sizeof(double));
}

Frame read_frame(int fd) {
    unsigned char header[kFrameHeaderBytes];
    read_all(fd, header, sizeof header);
    std::uint32_t magic;
    std::uint64_t len;
    Frame frame;
    std::memcpy(&magic, header, 4);
    std::memcpy(&frame.round, header + 4, 4);
    std::memcpy(&frame.machine_id, header + 8, 4);
    std::memcpy(&len, header + 12, 8);
    if (magic != kFrameMagic) throw TransportError("bad frame magic");
    if (len > (1ull << 32)) throw TransportError("implausible frame length");
    frame.payload.resize(len);
    if (len > 0) read_all(fd, frame.payload.data(), len * sizeof(double));
    return frame;
}

TcpListener::TcpListener(const std::string& addr, int backlog) {
    ignore_sigpipe();
    const Addr a = parse_addr(addr);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(std::uint16_t(a.port));
    sa.sin_addr.s_addr =
        a.host.empty() ? htonl(INADDR_ANY) : ::inet_addr(a.host.c_str());
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
        throw TransportError(std::string("bind ") + addr + ": " + std::strerror(errno));
    if (::listen(fd_, backlog) != 0)
        throw TransportError(std::string("listen: ") + std::strerror(errno));
    sockaddr_in bound{};
    socklen_t blen = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &blen);
    port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

int TcpListener::accept_connection() {
    for (;;) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return fd;
        }
        if (errno != EINTR)
            throw TransportError(std::string("accept: ") + std::strerror(errno));
    }
}

int tcp_connect(const std::string& addr) {
    ignore_sigpipe();
    const Addr a = parse_addr(addr);
    const std::string host = a.host.empty() ? "127.0.0.1" : a.host;
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(std::uint16_t(a.port));
    sa.sin_addr.s_addr = ::inet_addr(host.c_str());
    // workers may launch before the coordinator is listening: retry refused
    // connections for a few seconds before giving up
    for (int attempt = 0;; ++attempt) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
        if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return fd;
        }
        const int err = errno;
        ::close(fd);
        if ((err == ECONNREFUSED || err == EINTR) && attempt < 500) {
            ::usleep(10000);
            continue;
        }
        throw TransportError(std::string("connect ") + addr + ": " + std::strerror(err));
    }
}

void close_socket(int fd) {
    if (fd >= 0) ::close(fd);
}

void drain_and_close(int fd) {
    if (fd < 0) return;
    ::shutdown(fd, SHUT_WR);
    char buf[4096];
    for (int spins = 0; spins < 1 << 16; ++spins) {
        const ssize_t r = ::read(fd, buf, sizeof buf);
        if (r > 0) continue;
        if (r < 0 && errno == EINTR) continue;
        break;
    }
    ::close(fd);
}

}  // namespace pderm
