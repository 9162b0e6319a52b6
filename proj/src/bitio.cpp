#include "omra/bitio.hpp"

#include <bit>

#include "omra/error.hpp"

namespace omra {

namespace {

std::uint32_t se_to_ue(std::int32_t v) {
  return v > 0 ? static_cast<std::uint32_t>(2 * static_cast<std::int64_t>(v) - 1)
               : static_cast<std::uint32_t>(-2 * static_cast<std::int64_t>(v));
}

}  // namespace

void BitWriter::put_bit(bool bit) {
  if (stream_.bit_count % 8 == 0) stream_.payload.push_back(0);
  if (bit) stream_.payload.back() |= static_cast<std::uint8_t>(0x80u >> (stream_.bit_count % 8));
  ++stream_.bit_count;
}

void BitWriter::put_bits(std::uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put_bit((value >> i) & 1u);
}

void BitWriter::put_ue(std::uint32_t value) {
  std::uint64_t v = static_cast<std::uint64_t>(value) + 1;
  int len = std::bit_width(v);
  for (int i = 0; i < len - 1; ++i) put_bit(false);
  for (int i = len - 1; i >= 0; --i) put_bit((v >> i) & 1u);
}

void BitWriter::put_se(std::int32_t value) { put_ue(se_to_ue(value)); }

Bitstream BitWriter::finish() && { return std::move(stream_); }

bool BitReader::get_bit() {
  if (pos_ >= bs_.bit_count) throw DataError("exhausted bits");
  bool bit = (bs_.payload[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
  ++pos_;
  return bit;
}

std::uint32_t BitReader::get_bits(int count) {
  std::uint32_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint32_t>(get_bit());
  return v;
}

std::uint32_t BitReader::get_ue() {
  int zeros = 0;
  while (!get_bit()) {
    if (++zeros > 32) throw DataError("malformed exp-Golomb code");
  }
  std::uint64_t v = 1;
  for (int i = 0; i < zeros; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_bit());
  if (v - 1 > 0xffffffffULL) throw DataError("malformed exp-Golomb code");
  return static_cast<std::uint32_t>(v - 1);
}

std::int32_t BitReader::get_se() {
  std::uint32_t u = get_ue();
  std::int64_t v = (u & 1u) ? (static_cast<std::int64_t>(u) + 1) / 2 : -static_cast<std::int64_t>(u) / 2;
  return static_cast<std::int32_t>(v);
}

int ue_length(std::uint32_t value) { return 2 * std::bit_width(static_cast<std::uint64_t>(value) + 1) - 1; }

int se_length(std::int32_t value) { return ue_length(se_to_ue(value)); }

}  // namespace omra
