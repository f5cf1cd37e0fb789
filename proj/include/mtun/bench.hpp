// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// Throughput and latency comparison of the tunneling schemes. A sender and a
// receiver gateway are wired either directly in process or through loopback
// sockets, and one protected frame per size is replayed with a fresh PN.

#pragma once

#include <string>
#include <vector>

#include "mtun/gateway.hpp"

namespace mtun {

enum class BenchMode : std::uint8_t { InProcess, Loopback };

struct BenchConfig {
    std::vector<Scheme> schemes{Scheme::Naive, Scheme::Idf, Scheme::Enc, Scheme::FullEnc};
    std::vector<std::size_t> sizes{64, 256, 1400};  // MACsec frame sizes
    Duration duration = std::chrono::seconds(10);    // per size, shared by the schemes
    Duration slice = std::chrono::milliseconds(20);  // schemes alternate every slice
    BenchMode mode = BenchMode::InProcess;
    std::uint32_t window = kDefaultWindow;
    std::size_t latency_stride = 16;  // every n-th frame is timed on its own
    std::size_t in_flight = 64;       // loopback mode only
    std::uint64_t seed = 1;

    std::string validate() const;
};

struct BenchResult {
    Scheme scheme = Scheme::Naive;
    std::size_t frame_size = 0;
    std::size_t wire_size = 0;          // carrier datagram (UDP payload)
    std::ptrdiff_t overhead_bytes = 0;  // wire_size - frame_size
    std::uint64_t frames = 0;           // delivered bit-exact
    std::uint64_t failures = 0;         // lost or altered
    double seconds = 0;
    double frames_per_sec = 0;
    double bytes_per_sec = 0;  // frames_per_sec * wire_size
    double hash_ops_per_frame = 0;   // SipHash calls, sender plus receiver
    double block_ops_per_frame = 0;  // AES block operations, sender plus receiver
    double p50_us = 0;
    double p99_us = 0;
};

/// Wire size a scheme produces for a MACsec frame of `frame_size` bytes.
std::size_t bench_wire_size(Scheme scheme, std::size_t frame_size);

/// Runs every (size, scheme) pair. A zero duration yields no results.
Expected<std::vector<BenchResult>, std::string> run_bench(const BenchConfig& config);

/// Columns: scheme,frame_size,wire_size,overhead_bytes,frames,failures,seconds,
/// frames_per_sec,bytes_per_sec,hash_ops_per_frame,block_ops_per_frame,p50_us,p99_us
std::string bench_csv_header();
std::string bench_csv_row(const BenchResult& r);

}  // namespace mtun
