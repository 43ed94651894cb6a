#pragma once

// MD5 message digest, implemented from the public algorithm specification
// (RFC 1321). Digests are the file signatures used throughout the system.

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace avmas {

/// A 128-bit MD5 fingerprint.
struct Digest {
    std::array<std::uint8_t, 16> bytes{};

    /// 32-character lowercase hexadecimal rendering.
    std::string hex() const {
        static constexpr char kHexDigits[] = "0123456789abcdef";
        std::string out(32, '0');
        for (std::size_t i = 0; i < 16; ++i) {
            out[2 * i] = kHexDigits[bytes[i] >> 4];
            out[2 * i + 1] = kHexDigits[bytes[i] & 0x0f];
        }
        return out;
    }

    friend bool operator==(const Digest&, const Digest&) = default;
};

/// True iff `s` is a well-formed lowercase MD5 hex rendering.
inline bool is_md5_hex(std::string_view s) {
    if (s.size() != 32) {
        return false;
    }
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

/// Incremental MD5 hasher. Single-owner; feed chunks with update() and call
/// finish() exactly once.
class Md5 {
public:
    Md5() = default;

    void update(std::string_view data) {
        if (data.empty()) {
            return;
        }
        total_bytes_ += data.size();
        std::size_t offset = 0;
        if (buffer_len_ > 0) {
            const std::size_t take = std::min<std::size_t>(64 - buffer_len_, data.size());
            std::memcpy(buffer_.data() + buffer_len_, data.data(), take);
            buffer_len_ += take;
            offset = take;
            if (buffer_len_ == 64) {
                transform(buffer_.data());
                buffer_len_ = 0;
            }
        }
        while (offset + 64 <= data.size()) {
            transform(reinterpret_cast<const std::uint8_t*>(data.data()) + offset);
            offset += 64;
        }
        if (offset < data.size()) {
            std::memcpy(buffer_.data(), data.data() + offset, data.size() - offset);
            buffer_len_ = data.size() - offset;
        }
    }

    Digest finish() {
        // Pad to 56 mod 64, then append the bit length little-endian.
        const std::uint64_t bit_length = total_bytes_ * 8;
        static constexpr std::uint8_t kPad[64] = {0x80};
        const std::size_t pad_len = (buffer_len_ < 56) ? 56 - buffer_len_ : 120 - buffer_len_;
        update(std::string_view(reinterpret_cast<const char*>(kPad), pad_len));
        std::uint8_t length_bytes[8];
        for (int i = 0; i < 8; ++i) {
            length_bytes[i] = static_cast<std::uint8_t>(bit_length >> (8 * i));
        }
        // update() would recount the length bytes; feed them directly.
        std::memcpy(buffer_.data() + buffer_len_, length_bytes, 8);
        transform(buffer_.data());

        Digest digest;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                digest.bytes[4 * i + j] = static_cast<std::uint8_t>(state_[i] >> (8 * j));
            }
        }
        return digest;
    }

private:
    static std::uint32_t rotl(std::uint32_t x, std::uint32_t n) {
        return (x << n) | (x >> (32 - n));
    }

    void transform(const std::uint8_t block[64]) {
        // Per-step constants: K[i] = floor(2^32 * |sin(i + 1)|), S the
        // published rotation schedule.
        static constexpr std::uint32_t kK[64] = {
            0xd76aa478, 0xe8c7b756, 0x242070db, 0xc1bdceee, 0xf57c0faf, 0x4787c62a,
            0xa8304613, 0xfd469501, 0x698098d8, 0x8b44f7af, 0xffff5bb1, 0x895cd7be,
            0x6b901122, 0xfd987193, 0xa679438e, 0x49b40821, 0xf61e2562, 0xc040b340,
            0x265e5a51, 0xe9b6c7aa, 0xd62f105d, 0x02441453, 0xd8a1e681, 0xe7d3fbc8,
            0x21e1cde6, 0xc33707d6, 0xf4d50d87, 0x455a14ed, 0xa9e3e905, 0xfcefa3f8,
            0x676f02d9, 0x8d2a4c8a, 0xfffa3942, 0x8771f681, 0x6d9d6122, 0xfde5380c,
            0xa4beea44, 0x4bdecfa9, 0xf6bb4b60, 0xbebfbc70, 0x289b7ec6, 0xeaa127fa,
            0xd4ef3085, 0x04881d05, 0xd9d4d039, 0xe6db99e5, 0x1fa27cf8, 0xc4ac5665,
            0xf4292244, 0x432aff97, 0xab9423a7, 0xfc93a039, 0x655b59c3, 0x8f0ccc92,
            0xffeff47d, 0x85845dd1, 0x6fa87e4f, 0xfe2ce6e0, 0xa3014314, 0x4e0811a1,
            0xf7537e82, 0xbd3af235, 0x2ad7d2bb, 0xeb86d391};
        static constexpr std::uint32_t kS[64] = {
            7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
            5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20,
            4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
            6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21};

        std::uint32_t m[16];
        for (int i = 0; i < 16; ++i) {
            m[i] = static_cast<std::uint32_t>(block[4 * i]) |
                   static_cast<std::uint32_t>(block[4 * i + 1]) << 8 |
                   static_cast<std::uint32_t>(block[4 * i + 2]) << 16 |
                   static_cast<std::uint32_t>(block[4 * i + 3]) << 24;
        }

        std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
        for (int i = 0; i < 64; ++i) {
            std::uint32_t f;
            int g;
            if (i < 16) {
                f = (b & c) | (~b & d);
                g = i;
            } else if (i < 32) {
                f = (d & b) | (~d & c);
                g = (5 * i + 1) % 16;
            } else if (i < 48) {
                f = b ^ c ^ d;
                g = (3 * i + 5) % 16;
            } else {
                f = c ^ (b | ~d);
                g = (7 * i) % 16;
            }
            const std::uint32_t tmp = d;
            d = c;
            c = b;
            b = b + rotl(a + f + kK[i] + m[g], kS[i]);
            a = tmp;
        }
        state_[0] += a;
        state_[1] += b;
        state_[2] += c;
        state_[3] += d;
    }

    std::uint32_t state_[4] = {0x67452301, 0xefcdab89, 0x98badcfe, 0x10325476};
    std::uint64_t total_bytes_ = 0;
    std::array<std::uint8_t, 64> buffer_{};
    std::size_t buffer_len_ = 0;
};

/// MD5 of a byte sequence. Deterministic; empty input allowed.
inline Digest digest_bytes(std::string_view data) {
    Md5 hasher;
    hasher.update(data);
    return hasher.finish();
}

/// MD5 of the concatenation of `chunks`; equal to digest_bytes on the joined
/// bytes for every chunking.
inline Digest digest_stream(std::span<const std::string_view> chunks) {
    Md5 hasher;
    for (std::string_view chunk : chunks) {
        hasher.update(chunk);
    }
    return hasher.finish();
}

}  // namespace avmas
