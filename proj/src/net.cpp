// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <memory>

namespace tlsaudit::net {

namespace {

int remaining_ms(Deadline deadline)
{
    auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
}

bool poll_for(int fd, short events, Deadline deadline)
{
    for (;;) {
        pollfd p{fd, events, 0};
        int r = ::poll(&p, 1, remaining_ms(deadline));
        if (r > 0)
            return true;
        if (r == 0)
            return false;
        if (errno != EINTR)
            throw NetError(std::string("poll: ") + std::strerror(errno));
    }
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

struct AddrInfoFree {
    void operator()(addrinfo* a) const { freeaddrinfo(a); }
};

std::unique_ptr<addrinfo, AddrInfoFree> lookup(const std::string& host, std::uint16_t port)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string service = std::to_string(port);
    if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
        return nullptr;
    return std::unique_ptr<addrinfo, AddrInfoFree>(res);
}

std::string numeric(const sockaddr* sa, socklen_t len)
{
    char buf[NI_MAXHOST] = "";
    if (getnameinfo(sa, len, buf, sizeof buf, nullptr, 0, NI_NUMERICHOST) != 0)
        return "";
    return buf;
}

} // namespace

Socket& Socket::operator=(Socket&& o) noexcept
{
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

Socket Socket::connect(const std::string& host, std::uint16_t port, Millis timeout)
{
    Deadline deadline = deadline_after(timeout);
    auto res = lookup(host, port);
    if (!res)
        throw ConnectError("cannot resolve " + host);
    const addrinfo* ai = res.get();
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0)
        throw NetError(errno_text("socket"));
    Socket s(fd);
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) != 0) {
        if (errno != EINPROGRESS)
            throw ConnectError(errno_text("connect"));
        if (!poll_for(fd, POLLOUT, deadline))
            throw TimeoutError("connect timed out");
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0)
            throw ConnectError(std::string("connect: ") + std::strerror(err));
    }
    return s;
}

void Socket::write_all(std::span<const std::uint8_t> data, Deadline deadline)
{
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n > 0) {
            off += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno == EINTR)
            continue;
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            if (!poll_for(fd_, POLLOUT, deadline))
                throw TimeoutError("write timed out");
            continue;
        }
        if (n < 0 && (errno == EPIPE || errno == ECONNRESET))
            throw ClosedError("connection closed by peer");
        throw NetError(errno_text("send"));
    }
}

std::size_t Socket::read_some(std::uint8_t* buf, std::size_t n, Deadline deadline)
{
    for (;;) {
        ssize_t r = ::recv(fd_, buf, n, 0);
        if (r >= 0)
            return static_cast<std::size_t>(r);
        if (errno == EINTR)
            continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
            if (!poll_for(fd_, POLLIN, deadline))
                throw TimeoutError("read timed out");
            continue;
        }
        if (errno == ECONNRESET)
            return 0;
        throw NetError(errno_text("recv"));
    }
}

void Socket::read_exact(std::uint8_t* buf, std::size_t n, Deadline deadline)
{
    std::size_t off = 0;
    while (off < n) {
        std::size_t r = read_some(buf + off, n - off, deadline);
        if (r == 0)
            throw ClosedError("connection closed by peer");
        off += r;
    }
}

bool Socket::wait_readable(Deadline deadline) { return poll_for(fd_, POLLIN, deadline); }

std::string Socket::peer_address() const
{
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    if (getpeername(fd_, reinterpret_cast<sockaddr*>(&ss), &len) != 0)
        return "";
    return numeric(reinterpret_cast<sockaddr*>(&ss), len);
}

void Socket::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Listener Listener::bind_loopback(std::uint16_t port)
{
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
    if (fd < 0)
        throw NetError(errno_text("socket"));
    Listener l;
    l.fd_ = fd;
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw NetError(errno_text("bind"));
    if (::listen(fd, 64) != 0)
        throw NetError(errno_text("listen"));
    socklen_t len = sizeof addr;
    getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    l.port_ = ntohs(addr.sin_port);
    return l;
}

std::optional<Socket> Listener::accept(Millis wait)
{
    if (fd_ < 0 || !poll_for(fd_, POLLIN, deadline_after(wait)))
        return std::nullopt;
    int fd = ::accept4(fd_, nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
    if (fd < 0)
        return std::nullopt;
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return Socket(fd);
}

void Listener::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::optional<std::string> resolve(const std::string& host)
{
    auto res = lookup(host, 443);
    if (!res)
        return std::nullopt;
    std::string out = numeric(res->ai_addr, res->ai_addrlen);
    if (out.empty())
        return std::nullopt;
    return out;
}

bool is_loopback_literal(const std::string& host)
{
    in_addr v4{};
    if (inet_pton(AF_INET, host.c_str(), &v4) == 1)
        return (ntohl(v4.s_addr) >> 24) == 127;
    in6_addr v6{};
    if (inet_pton(AF_INET6, host.c_str(), &v6) == 1)
        return IN6_IS_ADDR_LOOPBACK(&v6);
    return false;
}

HostPort parse_host_port(const std::string& text, std::uint16_t default_port)
{
    HostPort hp;
    hp.port = default_port;
    auto parse_port = [&](const std::string& p) {
        if (p.empty() || p.size() > 5 || p.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("invalid port in '" + text + "'", 0);
        unsigned long v = std::stoul(p);
        if (v == 0 || v > 65535)
            throw ParseError("port out of range in '" + text + "'", 0);
        hp.port = static_cast<std::uint16_t>(v);
    };
    if (!text.empty() && text[0] == '[') {
        auto close = text.find(']');
        if (close == std::string::npos)
            throw ParseError("unterminated IPv6 literal in '" + text + "'", 0);
        hp.host = text.substr(1, close - 1);
        if (close + 1 < text.size()) {
            if (text[close + 1] != ':')
                throw ParseError("junk after IPv6 literal in '" + text + "'", close + 1);
            parse_port(text.substr(close + 2));
        }
        return hp;
    }
    auto colon = text.find(':');
    if (colon != std::string::npos && text.find(':', colon + 1) == std::string::npos) {
        hp.host = text.substr(0, colon);
        parse_port(text.substr(colon + 1));
    } else {
        hp.host = text;
    }
    if (hp.host.empty())
        throw ParseError("empty host", 0);
    return hp;
}

} // namespace tlsaudit::net
