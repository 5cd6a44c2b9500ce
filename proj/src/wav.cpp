#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "mirflex/audio.h"
#include "mirflex/error.h"

namespace mirflex {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

std::string format_tag_name(std::uint16_t tag) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%04X", tag);
  return buf;
}

// Decodes one little-endian sample of the given width into [-1, 1].
float decode_sample(const unsigned char* p, const WavFormat& fmt) {
  if (fmt.tag == kFormatFloat) {
    float v;
    std::memcpy(&v, p, sizeof v);
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kCorruptHeader, "non-finite float sample in data chunk");
    }
    return std::clamp(v, -1.0f, 1.0f);
  }
  switch (fmt.bits) {
    case 16: {
      auto v = static_cast<std::int16_t>(read_u16(p));
      return static_cast<float>(v / 32768.0);
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v / 8388608.0);
    }
    default: {
      auto v = static_cast<std::int32_t>(read_u32(p));
      return static_cast<float>(v / 2147483648.0);
    }
  }
}

}  // namespace

AudioBuffer decode_wav(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::kNotFound, "no such file: " + path, path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open: " + path, path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorKind::kCorruptHeader, "missing RIFF/WAVE signature in " + path);
  }

  std::optional<WavFormat> fmt;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::size_t len = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || len > avail) {
        throw Error(ErrorKind::kCorruptHeader, "truncated fmt chunk in " + path);
      }
      const unsigned char* f = bytes.data() + body;
      WavFormat w;
      w.tag = read_u16(f);
      w.channels = read_u16(f + 2);
      w.sample_rate = read_u32(f + 4);
      w.block_align = read_u16(f + 12);
      w.bits = read_u16(f + 14);
      if (w.tag == kFormatExtensible) {
        if (len < 26) throw Error(ErrorKind::kCorruptHeader, "truncated extensible fmt chunk");
        w.tag = read_u16(f + 24);
      }
      fmt = w;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streaming writers leave the size unset; take what is there.
      data_len = std::min(len, avail);
      if (fmt) break;
    }
    pos = body + len + (len & 1);
  }

  if (!fmt) throw Error(ErrorKind::kCorruptHeader, "no fmt chunk in " + path);
  if (!data) throw Error(ErrorKind::kCorruptHeader, "no data chunk in " + path);

  const WavFormat& f = *fmt;
  bool pcm_ok = f.tag == kFormatPcm && (f.bits == 16 || f.bits == 24 || f.bits == 32);
  bool float_ok = f.tag == kFormatFloat && f.bits == 32;
  if (!pcm_ok && !float_ok) {
    std::string tag = format_tag_name(f.tag);
    throw Error(ErrorKind::kUnsupportedFormat,
                "format " + tag + " with " + std::to_string(f.bits) + " bits is not supported",
                tag);
  }
  if (f.channels != 1 && f.channels != 2) {
    throw Error(ErrorKind::kUnsupportedFormat,
                std::to_string(f.channels) + " channels are not supported",
                std::to_string(f.channels) + "ch");
  }
  if (f.sample_rate == 0) throw Error(ErrorKind::kCorruptHeader, "zero sample rate");
  std::size_t width = f.bits / 8;
  if (f.block_align != width * f.channels) {
    throw Error(ErrorKind::kCorruptHeader, "block align does not match channels and bits");
  }

  std::size_t frames = data_len / f.block_align;
  std::vector<float> samples(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* p = data + i * f.block_align;
    if (f.channels == 1) {
      samples[i] = decode_sample(p, f);
    } else {
      double l = decode_sample(p, f);
      double r = decode_sample(p + width, f);
      samples[i] = static_cast<float>(0.5 * (l + r));
    }
  }
  return AudioBuffer(std::move(samples), static_cast<int>(f.sample_rate), path);
}

void write_wav(const std::string& path, const AudioBuffer& buf, WavEncoding encoding) {
  std::uint16_t bits = 16;
  std::uint16_t tag = kFormatPcm;
  switch (encoding) {
    case WavEncoding::kPcm16: bits = 16; break;
    case WavEncoding::kPcm24: bits = 24; break;
    case WavEncoding::kPcm32: bits = 32; break;
    case WavEncoding::kFloat32: bits = 32; tag = kFormatFloat; break;
  }
  std::uint32_t width = bits / 8;
  auto data_len = static_cast<std::uint32_t>(buf.size() * width);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz()));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz()) * width);
  put_u16(out, static_cast<std::uint16_t>(width));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_len);

  for (float s : buf.samples()) {
    if (encoding == WavEncoding::kFloat32) {
      char raw[4];
      std::memcpy(raw, &s, 4);
      out.append(raw, 4);
      continue;
    }
    double full = std::ldexp(1.0, bits - 1);
    auto v = static_cast<std::int64_t>(std::lround(s * full));
    v = std::clamp<std::int64_t>(v, -static_cast<std::int64_t>(full),
                                 static_cast<std::int64_t>(full) - 1);
    auto u = static_cast<std::uint32_t>(v);
    for (std::uint32_t b = 0; b < width; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kOutputUnwritable, "cannot write " + path, path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::kOutputUnwritable, "short write to " + path, path);
}

}  // namespace mirflex
