// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Thin POSIX socket wrappers. Every socket is non-blocking; endpoints are IPv4
// host:port pairs carried in GatewayId.

#pragma once

#include <optional>
#include <string>

#include "mtun/encap.hpp"

namespace mtun::net {

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    ~Fd() { reset(); }
    Fd(Fd&& o) noexcept : fd_(o.release()) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) reset(o.release());
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;

    int get() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }
    int release() {
        int f = fd_;
        fd_ = -1;
        return f;
    }
    void reset(int fd = -1);

private:
    int fd_ = -1;
};

/// strerror(errno) prefixed with `what`.
std::string errno_message(const char* what);
bool set_nonblocking(int fd);

class UdpSocket {
public:
    static Expected<UdpSocket, std::string> bind(const GatewayId& local);

    int fd() const { return fd_.get(); }
    GatewayId local() const { return local_; }
    bool send_to(const GatewayId& to, ByteView data);
    /// Resizes `buf` to the datagram; false when nothing is pending.
    bool recv_from(Bytes& buf, GatewayId& from);

private:
    Fd fd_;
    GatewayId local_;
};

/// A connected stream with an output buffer drained by flush().
class TcpStream {
public:
    static Expected<TcpStream, std::string> connect(const GatewayId& remote);
    static TcpStream adopt(Fd fd, const GatewayId& remote);

    int fd() const { return fd_.get(); }
    const GatewayId& remote() const { return remote_; }
    bool connected() const { return connected_; }
    bool open() const { return static_cast<bool>(fd_); }
    bool wants_write() const { return !connected_ || !out_.empty(); }

    /// Completes a pending connect once the socket is writable.
    bool finish_connect();
    void write(ByteView data);
    /// False when the peer closed or an error occurred.
    bool flush();
    /// Appends available bytes to `out`; false on close or error.
    bool read(Bytes& out);
    void close() { fd_.reset(); }

private:
    Fd fd_;
    GatewayId remote_;
    bool connected_ = false;
    Bytes out_;
};

class TcpListener {
public:
    static Expected<TcpListener, std::string> listen(const GatewayId& local);

    int fd() const { return fd_.get(); }
    GatewayId local() const { return local_; }
    std::optional<TcpStream> accept();

private:
    Fd fd_;
    GatewayId local_;
};

}  // namespace mtun::net
