#include "graspforge/depthproc/image.hpp"

#include "graspforge/error.hpp"
#include "graspforge/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace graspforge {

static_assert(std::endian::native == std::endian::little, "GFD1 I/O assumes a little-endian host");

void DepthImage::validate() const {
  if (width <= 0 || height <= 0 || data.size() != static_cast<std::size_t>(width) * height) {
    throw Error("InvalidImage", "dimensions do not match the data");
  }
  if (!(pitch > 0.0f)) throw Error("InvalidImage", "pitch must be positive");
  for (float d : data) {
    if (!std::isfinite(d) || d < 0.0f) throw Error("InvalidImage", "depths must be finite and >= 0");
  }
}

namespace {

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("InvalidImage", "truncated GFD1 record");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode_gfd1(const DepthImage& img) {
  std::string out = "GFD1";
  out.reserve(16 + img.data.size() * 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
  put<float>(out, img.pitch);
  out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size() * sizeof(float));
  return out;
}

DepthImage decode_gfd1(const std::string& bytes, std::size_t offset, std::size_t* consumed) {
  std::size_t pos = offset;
  if (bytes.compare(pos, 4, "GFD1") != 0) throw Error("InvalidImage", "missing GFD1 magic");
  pos += 4;
  DepthImage img;
  img.width = static_cast<int>(get<std::uint32_t>(bytes, pos));
  img.height = static_cast<int>(get<std::uint32_t>(bytes, pos));
  img.pitch = get<float>(bytes, pos);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (pos + n * sizeof(float) > bytes.size()) throw Error("InvalidImage", "truncated GFD1 data");
  img.data.resize(n);
  std::memcpy(img.data.data(), bytes.data() + pos, n * sizeof(float));
  pos += n * sizeof(float);
  if (consumed) *consumed = pos - offset;
  return img;
}

void write_gfd1(const std::filesystem::path& path, const DepthImage& img) {
  write_file_atomic(path, encode_gfd1(img));
}

DepthImage read_gfd1(const std::filesystem::path& path) { return decode_gfd1(read_file(path)); }

}  // namespace graspforge
