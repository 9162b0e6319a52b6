#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace omra {

// MSB-first bit sequence.
struct Bitstream {
  std::vector<std::uint8_t> payload;  // packed, trailing bits zero
  std::uint64_t bit_count = 0;

  friend bool operator==(const Bitstream&, const Bitstream&) = default;
};

class BitWriter {
 public:
  void put_bit(bool bit);
  void put_bits(std::uint32_t value, int count);
  // Unsigned exp-Golomb, order 0.
  void put_ue(std::uint32_t value);
  // Signed exp-Golomb: v > 0 -> 2v-1, v <= 0 -> -2v.
  void put_se(std::int32_t value);

  std::uint64_t bit_count() const { return stream_.bit_count; }
  Bitstream finish() &&;
  const Bitstream& stream() const { return stream_; }

 private:
  Bitstream stream_;
};

class BitReader {
 public:
  explicit BitReader(const Bitstream& bs) : bs_(bs) {}

  bool get_bit();
  std::uint32_t get_bits(int count);
  std::uint32_t get_ue();
  std::int32_t get_se();

  std::uint64_t position() const { return pos_; }
  std::uint64_t remaining() const { return bs_.bit_count - pos_; }

 private:
  const Bitstream& bs_;
  std::uint64_t pos_ = 0;
};

int ue_length(std::uint32_t value);
int se_length(std::int32_t value);

}  // namespace omra
