// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtun/net/lan.hpp"

#include <fcntl.h>
#include <linux/if_packet.h>
#include <linux/if_tun.h>
#include <net/ethernet.h>
#include <net/if.h>
#include <netinet/in.h>
#include <sys/ioctl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace mtun::net {

namespace {

constexpr std::size_t kFrameBuffer = 2048;

// Reads and writes whole frames on a file descriptor (TAP device or datagram socket).
class FdLan : public LanPort {
public:
    FdLan(Fd fd, std::string name) : fd_(std::move(fd)), name_(std::move(name)) {}

    int fd() const override { return fd_.get(); }
    bool recv(Bytes& frame) override {
        frame.resize(kFrameBuffer);
        const ssize_t n = ::read(fd_.get(), frame.data(), frame.size());
        if (n <= 0) return false;
        frame.resize(static_cast<std::size_t>(n));
        return true;
    }
    bool send(ByteView frame) override {
        return ::write(fd_.get(), frame.data(), frame.size()) == static_cast<ssize_t>(frame.size());
    }
    std::string describe() const override { return name_; }

private:
    Fd fd_;
    std::string name_;
};

class UdpLan : public LanPort {
public:
    UdpLan(UdpSocket sock, GatewayId remote, std::string name)
        : sock_(std::move(sock)), remote_(remote), name_(std::move(name)) {}

    int fd() const override { return sock_.fd(); }
    bool recv(Bytes& frame) override {
        GatewayId from;
        return sock_.recv_from(frame, from);
    }
    bool send(ByteView frame) override { return sock_.send_to(remote_, frame); }
    std::string describe() const override { return name_; }

private:
    UdpSocket sock_;
    GatewayId remote_;
    std::string name_;
};

Expected<std::unique_ptr<LanPort>, std::string> open_raw(const std::string& ifname) {
    Fd fd(::socket(AF_PACKET, SOCK_RAW | SOCK_NONBLOCK | SOCK_CLOEXEC, htons(ETH_P_ALL)));
    if (!fd) return errno_message("packet socket");
    const unsigned index = ::if_nametoindex(ifname.c_str());
    if (index == 0) return "unknown interface " + ifname;
    sockaddr_ll sll{};
    sll.sll_family = AF_PACKET;
    sll.sll_protocol = htons(ETH_P_ALL);
    sll.sll_ifindex = static_cast<int>(index);
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sll), sizeof sll) != 0) return errno_message("bind packet socket");
    const int one = 1;
    ::setsockopt(fd.get(), SOL_PACKET, PACKET_IGNORE_OUTGOING, &one, sizeof one);
    packet_mreq mr{};
    mr.mr_ifindex = static_cast<int>(index);
    mr.mr_type = PACKET_MR_PROMISC;
    ::setsockopt(fd.get(), SOL_PACKET, PACKET_ADD_MEMBERSHIP, &mr, sizeof mr);
    return std::unique_ptr<LanPort>(std::make_unique<FdLan>(std::move(fd), "raw:" + ifname));
}

Expected<std::unique_ptr<LanPort>, std::string> open_tap(const std::string& name) {
    Fd fd(::open("/dev/net/tun", O_RDWR | O_NONBLOCK | O_CLOEXEC));
    if (!fd) return errno_message("/dev/net/tun");
    ifreq ifr{};
    ifr.ifr_flags = IFF_TAP | IFF_NO_PI;
    std::strncpy(ifr.ifr_name, name.c_str(), IFNAMSIZ - 1);
    if (::ioctl(fd.get(), TUNSETIFF, &ifr) != 0) return errno_message("TUNSETIFF");
    return std::unique_ptr<LanPort>(std::make_unique<FdLan>(std::move(fd), "tap:" + std::string(ifr.ifr_name)));
}

Expected<std::unique_ptr<LanPort>, std::string> open_udp(std::string_view spec) {
    const auto slash = spec.find('/');
    if (slash == std::string_view::npos) return std::string("udp LAN needs LOCAL/REMOTE");
    auto local = GatewayId::parse(spec.substr(0, slash));
    auto remote = GatewayId::parse(spec.substr(slash + 1));
    if (!local || !remote) return std::string("bad udp LAN endpoints");
    auto sock = UdpSocket::bind(*local);
    if (!sock) return sock.error();
    return std::unique_ptr<LanPort>(
        std::make_unique<UdpLan>(std::move(sock.value()), *remote, "udp:" + std::string(spec)));
}

}  // namespace

Expected<std::unique_ptr<LanPort>, std::string> open_lan(std::string_view spec) {
    if (spec.empty()) return std::string("empty LAN attachment");
    if (spec.starts_with("udp:")) return open_udp(spec.substr(4));
    if (spec.starts_with("tap:")) return open_tap(std::string(spec.substr(4)));
    if (spec.starts_with("raw:")) return open_raw(std::string(spec.substr(4)));
    return open_raw(std::string(spec));
}

Expected<LanPair, std::string> make_lan_pair() {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0, sv) != 0) return errno_message("socketpair");
    const int size = 4 << 20;
    for (int s : sv) {
        ::setsockopt(s, SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
        ::setsockopt(s, SOL_SOCKET, SO_SNDBUF, &size, sizeof size);
    }
    LanPair p;
    p.port = std::make_unique<FdLan>(Fd(sv[0]), "pair");
    p.driver = Fd(sv[1]);
    return p;
}

}  // namespace mtun::net
