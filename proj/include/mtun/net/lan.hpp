// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// LAN attachments of a gateway:
//
//   raw:IFNAME                  AF_PACKET socket on an interface (needs CAP_NET_RAW)
//   tap:NAME                    TAP device (needs CAP_NET_ADMIN)
//   udp:LOCAL/REMOTE            Ethernet frames carried one per UDP datagram,
//                               e.g. udp:127.0.0.1:7000/127.0.0.1:7001
//
// A bare interface name is taken as raw:.

#pragma once

#include <memory>
#include <string_view>

#include "mtun/net/socket.hpp"

namespace mtun::net {

class LanPort {
public:
    virtual ~LanPort() = default;
    virtual int fd() const = 0;
    /// Next frame into `frame`; false when none is pending.
    virtual bool recv(Bytes& frame) = 0;
    virtual bool send(ByteView frame) = 0;
    virtual std::string describe() const = 0;
};

Expected<std::unique_ptr<LanPort>, std::string> open_lan(std::string_view spec);

/// A datagram socket pair: the port for a runtime and the other end for a driver.
struct LanPair {
    std::unique_ptr<LanPort> port;
    Fd driver;
};
Expected<LanPair, std::string> make_lan_pair();

}  // namespace mtun::net
