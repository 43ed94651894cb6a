#include <random>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "avmas/md5.hpp"

using namespace avmas;

TEST_CASE("md5 standard test vectors", "[md5]") {
    // The seven strings from the algorithm's published test suite, verified
    // against an independent MD5 oracle.
    const std::pair<std::string, std::string> vectors[] = {
        {"", "d41d8cd98f00b204e9800998ecf8427e"},
        {"a", "0cc175b9c0f1b6a831c399e269772661"},
        {"abc", "900150983cd24fb0d6963f7d28e17f72"},
        {"message digest", "f96b697d7cb7938d525a2f31aaf161d0"},
        {"abcdefghijklmnopqrstuvwxyz", "c3fcd3d76192e4007dfb496cca67e13b"},
        {"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789",
         "d174ab98d277d9f5a5611c2c9f419d9f"},
        {"123456789012345678901234567890123456789012345678901234567890123456"
         "78901234567890",
         "57edf4a22be3c955ac49da2e2107b67a"},
    };
    for (const auto& [input, expected] : vectors) {
        CAPTURE(input);
        CHECK(digest_bytes(input).hex() == expected);
    }
}

TEST_CASE("md5 determinism and hex form", "[md5]") {
    const std::string data = "same bytes, same digest";
    const Digest first = digest_bytes(data);
    const Digest second = digest_bytes(data);
    CHECK(first == second);

    const std::string hex = first.hex();
    CHECK(hex.size() == 32);
    for (char c : hex) {
        CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
    }
    CHECK(first.hex() == hex);  // re-rendering is idempotent
    CHECK(is_md5_hex(hex));
    CHECK_FALSE(is_md5_hex("D41D8CD98F00B204E9800998ECF8427E"));  // uppercase rejected
}

TEST_CASE("md5 stream equals whole-buffer digest", "[md5]") {
    const std::vector<std::string_view> ab_c = {"ab", "c"};
    CHECK(digest_stream(ab_c) == digest_bytes("abc"));

    const std::vector<std::string_view> just_empty = {""};
    CHECK(digest_stream(just_empty) == digest_bytes(""));
}

TEST_CASE("md5 chunking invariance over random splits", "[md5][property]") {
    // 1 MiB of fixed pseudorandom bytes split at random boundaries must hash
    // identically to the unsplit buffer.
    std::mt19937_64 gen(0xc0ffee);
    std::string data(1 << 20, '\0');
    for (char& c : data) {
        c = static_cast<char>(gen());
    }
    const Digest whole = digest_bytes(data);

    for (int round = 0; round < 8; ++round) {
        std::vector<std::string_view> chunks;
        std::size_t pos = 0;
        while (pos < data.size()) {
            const std::size_t len = std::min<std::size_t>(data.size() - pos, gen() % 100003 + 1);
            chunks.push_back(std::string_view(data).substr(pos, len));
            pos += len;
            if (round % 2 == 0) {
                chunks.push_back("");  // interleave empty chunks
            }
        }
        CAPTURE(round, chunks.size());
        CHECK(digest_stream(chunks) == whole);
    }

    // Sanity on the incremental API around the 64-byte block boundary.
    for (std::size_t split : {std::size_t{1}, std::size_t{63}, std::size_t{64}, std::size_t{65},
                              std::size_t{127}, std::size_t{128}}) {
        Md5 hasher;
        hasher.update(std::string_view(data).substr(0, split));
        hasher.update(std::string_view(data).substr(split, 200));
        CHECK(hasher.finish() == digest_bytes(data.substr(0, split + 200)));
    }
}
