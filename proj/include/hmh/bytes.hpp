#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hmh {

using Bytes = std::vector<std::uint8_t>;
using BytesView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(BytesView b) {
    return std::string(b.begin(), b.end());
}

inline void append(Bytes& out, BytesView more) {
    out.insert(out.end(), more.begin(), more.end());
}

inline void append(Bytes& out, std::string_view more) {
    out.insert(out.end(), more.begin(), more.end());
}

// Big-endian integer packing used by every fixed-width wire field.
void put_u16_be(Bytes& out, std::uint16_t v);
void put_u32_be(Bytes& out, std::uint32_t v);
void put_u64_be(Bytes& out, std::uint64_t v);

// Little-endian packing (digest file header, expand domain tag).
void put_u16_le(Bytes& out, std::uint16_t v);
void put_u32_le(Bytes& out, std::uint32_t v);

/// Sequential reader with bounds checking; throws Error(Parse) on underrun.
class ByteReader {
  public:
    explicit ByteReader(BytesView data) : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16_be();
    std::uint32_t u32_be();
    std::uint64_t u64_be();
    std::uint32_t u32_le();
    std::uint16_t u16_le();
    Bytes take(std::size_t len);
    void expect(std::string_view magic);

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }
    void require_done() const;

  private:
    void need(std::size_t len) const;
    BytesView data_;
    std::size_t pos_ = 0;
};

std::string to_hex(BytesView data);
Bytes from_hex(std::string_view hex);  // throws Error(Parse)

std::string to_base64(BytesView data);
Bytes from_base64(std::string_view b64);  // throws Error(Parse)

}  // namespace hmh
