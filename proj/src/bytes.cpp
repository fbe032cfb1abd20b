#include "hmh/bytes.hpp"

#include <array>

#include "hmh/errors.hpp"

namespace hmh {

void put_u16_be(Bytes& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

void put_u32_be(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(std::uint8_t(v >> shift));
}

void put_u64_be(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(std::uint8_t(v >> shift));
}

void put_u16_le(Bytes& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
}

void put_u32_le(Bytes& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) out.push_back(std::uint8_t(v >> shift));
}

void ByteReader::need(std::size_t len) const {
    if (remaining() < len) raise(ErrorCode::Parse, "unexpected end of input");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint16_t ByteReader::u16_be() {
    need(2);
    std::uint16_t v = std::uint16_t(data_[pos_]) << 8 | data_[pos_ + 1];
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::u32_be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | data_[pos_ + i];
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64_be() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | data_[pos_ + i];
    pos_ += 8;
    return v;
}

std::uint16_t ByteReader::u16_le() {
    need(2);
    std::uint16_t v = std::uint16_t(data_[pos_]) | std::uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::u32_le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | data_[pos_ + i];
    pos_ += 4;
    return v;
}

Bytes ByteReader::take(std::size_t len) {
    need(len);
    Bytes out(data_.begin() + pos_, data_.begin() + pos_ + len);
    pos_ += len;
    return out;
}

void ByteReader::expect(std::string_view magic) {
    need(magic.size());
    for (std::size_t i = 0; i < magic.size(); ++i) {
        if (data_[pos_ + i] != std::uint8_t(magic[i]))
            raise(ErrorCode::Parse, "bad magic, expected " + std::string(magic));
    }
    pos_ += magic.size();
}

void ByteReader::require_done() const {
    if (!done()) raise(ErrorCode::Parse, "trailing bytes after message");
}

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr char kB64Digits[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_val(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::string to_hex(BytesView data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) raise(ErrorCode::Parse, "odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_val(hex[i]);
        int lo = hex_val(hex[i + 1]);
        if (hi < 0 || lo < 0) raise(ErrorCode::Parse, "invalid hex digit");
        out.push_back(std::uint8_t(hi << 4 | lo));
    }
    return out;
}

std::string to_base64(BytesView data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t v = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
        out.push_back(kB64Digits[v >> 18 & 63]);
        out.push_back(kB64Digits[v >> 12 & 63]);
        out.push_back(kB64Digits[v >> 6 & 63]);
        out.push_back(kB64Digits[v & 63]);
    }
    std::size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t v = data[i] << 16;
        out.push_back(kB64Digits[v >> 18 & 63]);
        out.push_back(kB64Digits[v >> 12 & 63]);
        out.append("==");
    } else if (rest == 2) {
        std::uint32_t v = data[i] << 16 | data[i + 1] << 8;
        out.push_back(kB64Digits[v >> 18 & 63]);
        out.push_back(kB64Digits[v >> 12 & 63]);
        out.push_back(kB64Digits[v >> 6 & 63]);
        out.push_back('=');
    }
    return out;
}

Bytes from_base64(std::string_view b64) {
    if (b64.size() % 4 != 0) raise(ErrorCode::Parse, "base64 length not a multiple of 4");
    Bytes out;
    out.reserve(b64.size() / 4 * 3);
    for (std::size_t i = 0; i < b64.size(); i += 4) {
        std::array<int, 4> v{};
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            char c = b64[i + j];
            if (c == '=') {
                if (i + 4 != b64.size() || j < 2) raise(ErrorCode::Parse, "misplaced base64 padding");
                ++pad;
                v[j] = 0;
            } else {
                if (pad) raise(ErrorCode::Parse, "data after base64 padding");
                v[j] = b64_val(c);
                if (v[j] < 0) raise(ErrorCode::Parse, "invalid base64 digit");
            }
        }
        std::uint32_t bits = v[0] << 18 | v[1] << 12 | v[2] << 6 | v[3];
        out.push_back(std::uint8_t(bits >> 16));
        if (pad < 2) out.push_back(std::uint8_t(bits >> 8));
        if (pad < 1) out.push_back(std::uint8_t(bits));
    }
    return out;
}

}  // namespace hmh
