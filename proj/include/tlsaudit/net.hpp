// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/error.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace tlsaudit::net {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;
using Millis = std::chrono::milliseconds;

class NetError : public Error {
public:
    using Error::Error;
};

// Connect refused, unreachable or unresolvable.
class ConnectError : public NetError {
public:
    using NetError::NetError;
};

class TimeoutError : public NetError {
public:
    using NetError::NetError;
};

// Peer closed the connection before the expected bytes arrived.
class ClosedError : public NetError {
public:
    using NetError::NetError;
};

inline Deadline deadline_after(Millis timeout) { return Clock::now() + timeout; }

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    // Connects to the first address of host (IPv4 or IPv6 literal or name).
    static Socket connect(const std::string& host, std::uint16_t port, Millis timeout);

    void write_all(std::span<const std::uint8_t> data, Deadline deadline);
    // Returns 0 on orderly EOF.
    std::size_t read_some(std::uint8_t* buf, std::size_t n, Deadline deadline);
    void read_exact(std::uint8_t* buf, std::size_t n, Deadline deadline);
    // Whether data (or EOF) is readable before the deadline.
    bool wait_readable(Deadline deadline);
    std::string peer_address() const;
    bool valid() const { return fd_ >= 0; }
    void close();

private:
    int fd_ = -1;
};

// Loopback TCP listener on an ephemeral port.
class Listener {
public:
    Listener() = default;
    Listener(Listener&& o) noexcept : fd_(o.fd_), port_(o.port_) { o.fd_ = -1; }
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    Listener& operator=(Listener&& o) noexcept
    {
        if (this != &o) {
            close();
            fd_ = o.fd_;
            port_ = o.port_;
            o.fd_ = -1;
        }
        return *this;
    }
    ~Listener() { close(); }

    static Listener bind_loopback(std::uint16_t port = 0);
    std::uint16_t port() const { return port_; }
    // nullopt when nothing arrived within wait.
    std::optional<Socket> accept(Millis wait);
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// First A/AAAA address of host as a numeric string; nullopt when unresolvable.
std::optional<std::string> resolve(const std::string& host);

bool is_loopback_literal(const std::string& host);

struct HostPort {
    std::string host;
    std::uint16_t port = 443;
};
// "host", "host:port", "[v6]:port" or a bare IPv6 literal.
HostPort parse_host_port(const std::string& text, std::uint16_t default_port = 443);

} // namespace tlsaudit::net
