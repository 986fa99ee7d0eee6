#include "aos/image.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aos/error.hpp"

namespace aos {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(path.string(), "cannot open for writing");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string(), "cannot open for reading");
  }
  return in;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) {
        break;
      }
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path, const char* field) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) {
      throw std::invalid_argument(tok);
    }
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string(), field, "expected a positive integer, got '" + tok + "'");
  }
}

template <typename T>
Image<T> read_pgm_impl(const std::filesystem::path& path, int expected_max) {
  auto in = open_in(path);
  if (header_token(in) != "P5") {
    throw FormatError(path.string(), "magic", "expected binary PGM 'P5'");
  }
  const int w = parse_dim(header_token(in), path, "width");
  const int h = parse_dim(header_token(in), path, "height");
  const int maxval = parse_dim(header_token(in), path, "maxval");
  if ((expected_max == 255) != (maxval < 256)) {
    throw FormatError(path.string(), "maxval",
                      "unsupported maxval " + std::to_string(maxval) + " for this reader");
  }
  Image<T> img(w, h);
  if constexpr (sizeof(T) == 1) {
    in.read(reinterpret_cast<char*>(img.samples.data()), static_cast<std::streamsize>(img.size()));
  } else {
    std::vector<unsigned char> raw(img.size() * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    for (std::size_t i = 0; i < img.size(); ++i) {
      img.samples[i] = static_cast<T>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
  }
  if (!in) {
    throw FormatError(path.string(), "data", "truncated pixel data");
  }
  return img;
}

}  // namespace

void require_finite(const HdrImage& img) {
  for (float v : img.samples) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("image contains non-finite samples");
    }
  }
}

void write_pfm(const std::filesystem::path& path, const HdrImage& img) {
  auto out = open_out(path);
  out << "Pf\n" << img.width << ' ' << img.height << "\n-1.0\n";
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes little-endian host");
  for (int y = img.height - 1; y >= 0; --y) {
    const auto r = img.row(y);
    out.write(reinterpret_cast<const char*>(r.data()),
              static_cast<std::streamsize>(r.size() * sizeof(float)));
  }
  if (!out) {
    throw IoError(path.string(), "write failed");
  }
}

HdrImage read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string magic = header_token(in);
  if (magic != "Pf") {
    throw FormatError(path.string(), "magic", "expected grayscale PFM 'Pf', got '" + magic + "'");
  }
  const int w = parse_dim(header_token(in), path, "width");
  const int h = parse_dim(header_token(in), path, "height");
  const std::string scale_tok = header_token(in);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw FormatError(path.string(), "scale", "not a number: '" + scale_tok + "'");
  }
  const bool little = scale < 0.0;
  HdrImage img(w, h);
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * 4);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) {
      throw FormatError(path.string(), "data", "truncated pixel data");
    }
    auto r = img.row(y);
    for (int x = 0; x < w; ++x) {
      std::uint32_t bits = 0;
      const unsigned char* p = raw.data() + 4 * x;
      if (little) {
        bits = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
      } else {
        bits = p[3] | (p[2] << 8) | (p[1] << 16) | (static_cast<std::uint32_t>(p[0]) << 24);
      }
      r[x] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.samples.data()),
            static_cast<std::streamsize>(img.size()));
  if (!out) {
    throw IoError(path.string(), "write failed");
  }
}

GrayImage read_pgm(const std::filesystem::path& path) {
  return read_pgm_impl<std::uint8_t>(path, 255);
}

void write_pgm16(const std::filesystem::path& path, const CountMap& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  std::vector<unsigned char> raw(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw IoError(path.string(), "write failed");
  }
}

CountMap read_pgm16(const std::filesystem::path& path) {
  return read_pgm_impl<std::uint16_t>(path, 65535);
}

double mean(const HdrImage& img) {
  if (img.empty()) {
    throw std::invalid_argument("mean: empty image");
  }
  double s = 0.0;
  for (float v : img.samples) {
    s += v;
  }
  return s / static_cast<double>(img.size());
}

}  // namespace aos
