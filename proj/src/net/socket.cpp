// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace mtun::net {

namespace {

sockaddr_in to_sockaddr(const GatewayId& g) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(g.ipv4);
    sa.sin_port = htons(g.port);
    return sa;
}

GatewayId from_sockaddr(const sockaddr_in& sa) { return GatewayId{ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)}; }

GatewayId local_of(int fd) {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
    return from_sockaddr(sa);
}

}  // namespace

void Fd::reset(int fd) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
}

std::string errno_message(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

bool set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    return flags >= 0 && ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) == 0;
}

// ---------------------------------------------------------------------------

Expected<UdpSocket, std::string> UdpSocket::bind(const GatewayId& local) {
    Fd fd(::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
    if (!fd) return errno_message("udp socket");
    const int size = 4 << 20;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
    ::setsockopt(fd.get(), SOL_SOCKET, SO_SNDBUF, &size, sizeof size);
    const sockaddr_in sa = to_sockaddr(local);
    if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
        return errno_message(("udp bind " + local.to_string()).c_str());
    UdpSocket s;
    s.local_ = local_of(fd.get());
    s.fd_ = std::move(fd);
    return s;
}

bool UdpSocket::send_to(const GatewayId& to, ByteView data) {
    const sockaddr_in sa = to_sockaddr(to);
    return ::sendto(fd_.get(), data.data(), data.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) ==
           static_cast<ssize_t>(data.size());
}

bool UdpSocket::recv_from(Bytes& buf, GatewayId& from) {
    buf.resize(65536);
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    const ssize_t n = ::recvfrom(fd_.get(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
    if (n < 0) return false;
    buf.resize(static_cast<std::size_t>(n));
    from = from_sockaddr(sa);
    return true;
}

// ---------------------------------------------------------------------------

Expected<TcpStream, std::string> TcpStream::connect(const GatewayId& remote) {
    Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
    if (!fd) return errno_message("tcp socket");
    const int one = 1;
    ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    const sockaddr_in sa = to_sockaddr(remote);
    TcpStream s;
    s.remote_ = remote;
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) == 0)
        s.connected_ = true;
    else if (errno != EINPROGRESS)
        return errno_message(("connect " + remote.to_string()).c_str());
    s.fd_ = std::move(fd);
    return s;
}

TcpStream TcpStream::adopt(Fd fd, const GatewayId& remote) {
    TcpStream s;
    s.fd_ = std::move(fd);
    s.remote_ = remote;
    s.connected_ = true;
    return s;
}

bool TcpStream::finish_connect() {
    if (connected_) return true;
    int err = 0;
    socklen_t len = sizeof err;
    if (::getsockopt(fd_.get(), SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) {
        close();
        return false;
    }
    connected_ = true;
    return true;
}

void TcpStream::write(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }

bool TcpStream::flush() {
    std::size_t done = 0;
    while (done < out_.size()) {
        const ssize_t n = ::send(fd_.get(), out_.data() + done, out_.size() - done, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK) break;
            if (errno == EINTR) continue;
            close();
            return false;
        }
        done += static_cast<std::size_t>(n);
    }
    out_.erase(out_.begin(), out_.begin() + static_cast<std::ptrdiff_t>(done));
    return true;
}

bool TcpStream::read(Bytes& out) {
    std::uint8_t chunk[16384];
    for (;;) {
        const ssize_t n = ::recv(fd_.get(), chunk, sizeof chunk, 0);
        if (n > 0) {
            out.insert(out.end(), chunk, chunk + n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
        if (n < 0 && errno == EINTR) continue;
        close();
        return false;
    }
}

// ---------------------------------------------------------------------------

Expected<TcpListener, std::string> TcpListener::listen(const GatewayId& local) {
    Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
    if (!fd) return errno_message("tcp socket");
    const int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const sockaddr_in sa = to_sockaddr(local);
    if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
        return errno_message(("tcp bind " + local.to_string()).c_str());
    if (::listen(fd.get(), 16) != 0) return errno_message("listen");
    TcpListener l;
    l.local_ = local_of(fd.get());
    l.fd_ = std::move(fd);
    return l;
}

std::optional<TcpStream> TcpListener::accept() {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    const int c = ::accept4(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len, SOCK_NONBLOCK | SOCK_CLOEXEC);
    if (c < 0) return std::nullopt;
    const int one = 1;
    ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpStream::adopt(Fd(c), from_sockaddr(sa));
}

}  // namespace mtun::net
