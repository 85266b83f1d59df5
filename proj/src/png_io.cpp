#include "scdr/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "scdr/errors.hpp"

namespace scdr {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  std::span<const std::uint8_t> payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), out.data() + crc_start,
                          static_cast<uInt>(out.size() - crc_start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

}  // namespace

std::uint8_t quantize_unit(float v) {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0f + 0.5f));
}

std::vector<std::uint8_t> encode_gray_png(const GrayImage& image) {
  if (image.width < 1 || image.height < 1)
    throw DimensionError("png: image extents must be positive");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
    throw DimensionError("png: pixel count does not match extents");

  // Filter 0 on every scanline.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
  for (int r = 0; r < image.height; ++r) {
    raw.push_back(0);
    const std::uint8_t* row = image.pixels.data() + static_cast<std::size_t>(r) * image.width;
    raw.insert(raw.end(), row, row + image.width);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> zdata(zlen);
  if (compress2(zdata.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png: deflate failed");
  zdata.resize(zlen);

  std::vector<std::uint8_t> out(kSignature, kSignature + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(image.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(image.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(image.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(image.width);
  ihdr[4] = static_cast<std::uint8_t>(image.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(image.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(image.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(image.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 0;   // grayscale
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter method
  ihdr[12] = 0;  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", zdata);
  append_chunk(out, "IEND", {});
  return out;
}

void write_gray_png(const std::string& path, const GrayImage& image) {
  const auto bytes = encode_gray_png(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("png: cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("png: write failed: " + path);
}

GrayImage read_gray_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("png: cannot open for reading: " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (data.size() < 8 || std::memcmp(data.data(), kSignature, 8) != 0)
    throw IoError("png: bad signature: " + path);

  GrayImage img;
  std::vector<std::uint8_t> zdata;
  std::size_t pos = 8;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 12 <= data.size() && !saw_iend) {
    const std::uint32_t len = get_u32(data.data() + pos);
    if (pos + 12 + len > data.size()) throw IoError("png: truncated chunk: " + path);
    const char* type = reinterpret_cast<const char*>(data.data() + pos + 4);
    const std::uint8_t* payload = data.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("png: bad IHDR: " + path);
      img.width = static_cast<int>(get_u32(payload));
      img.height = static_cast<int>(get_u32(payload + 4));
      if (payload[8] != 8 || payload[9] != 0 || payload[10] != 0 || payload[11] != 0 ||
          payload[12] != 0)
        throw IoError("png: unsupported format (need 8-bit grayscale): " + path);
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      zdata.insert(zdata.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend || img.width < 1 || img.height < 1)
    throw IoError("png: missing chunks: " + path);

  const std::size_t stride = static_cast<std::size_t>(img.width) + 1;
  std::vector<std::uint8_t> raw(stride * img.height);
  uLongf rawlen = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &rawlen, zdata.data(), static_cast<uLong>(zdata.size())) != Z_OK ||
      rawlen != raw.size())
    throw IoError("png: inflate failed: " + path);

  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int r = 0; r < img.height; ++r) {
    const std::uint8_t filter = raw[static_cast<std::size_t>(r) * stride];
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(r) * stride + 1;
    std::uint8_t* dst = img.pixels.data() + static_cast<std::size_t>(r) * img.width;
    const std::uint8_t* up =
        r > 0 ? img.pixels.data() + static_cast<std::size_t>(r - 1) * img.width : nullptr;
    for (int c = 0; c < img.width; ++c) {
      const int left = c > 0 ? dst[c - 1] : 0;
      const int above = up ? up[c] : 0;
      const int upleft = (up && c > 0) ? up[c - 1] : 0;
      int v = src[c];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += above; break;
        case 3: v += (left + above) / 2; break;
        case 4: {
          const int p = left + above - upleft;
          const int pa = std::abs(p - left), pb = std::abs(p - above), pc = std::abs(p - upleft);
          v += (pa <= pb && pa <= pc) ? left : (pb <= pc ? above : upleft);
          break;
        }
        default: throw IoError("png: unknown filter type: " + path);
      }
      dst[c] = static_cast<std::uint8_t>(v & 0xFF);
    }
  }
  return img;
}

}  // namespace scdr
