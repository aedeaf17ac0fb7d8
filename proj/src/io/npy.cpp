#include "featprobe/io/npy.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>

namespace featprobe::io {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;

struct Header {
  std::string descr;
  bool fortran_order = false;
  Shape shape;
};

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::kMalformedHeader, "malformed NPY header in " + path.string() + ": " + what);
}

// Minimal parser for the Python dict literal numpy writes.
class DictParser {
 public:
  DictParser(std::string_view text, const std::filesystem::path& path) : text_(text), path_(path) {}

  Header parse() {
    Header header;
    bool have_descr = false, have_order = false, have_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        header.descr = parse_string();
        have_descr = true;
      } else if (key == "fortran_order") {
        header.fortran_order = parse_bool();
        have_order = true;
      } else if (key == "shape") {
        header.shape = parse_shape();
        have_shape = true;
      } else {
        malformed(path_, "unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        malformed(path_, "expected ',' or '}'");
      }
    }
    if (!have_descr || !have_order || !have_shape) malformed(path_, "missing required key");
    return header;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) malformed(path_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    skip_ws();
    char quote = peek();
    if (quote != '\'' && quote != '"') malformed(path_, "expected string");
    ++pos_;
    auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) malformed(path_, "unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  bool parse_bool() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    malformed(path_, "expected True/False");
  }

  Shape parse_shape() {
    expect('(');
    Shape shape;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) malformed(path_, "bad shape entry");
      std::size_t value = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        value = value * 10 + static_cast<std::size_t>(peek() - '0');
        ++pos_;
      }
      shape.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    return shape;
  }

  std::string_view text_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

struct RawArray {
  Header header;
  std::vector<char> payload;
};

RawArray read_raw(const std::filesystem::path& path, bool with_payload = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  char preamble[10];
  in.read(preamble, sizeof preamble);
  if (in.gcount() != sizeof preamble || std::memcmp(preamble, kMagic, kMagicLen) != 0) {
    malformed(path, "bad magic");
  }
  if (preamble[6] != 1 || preamble[7] != 0) malformed(path, "only NPY version 1.0 is supported");
  std::uint16_t header_len = static_cast<std::uint8_t>(preamble[8]) |
                             (static_cast<std::uint16_t>(static_cast<std::uint8_t>(preamble[9])) << 8);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (static_cast<std::size_t>(in.gcount()) != header_len) malformed(path, "truncated header");

  RawArray raw;
  raw.header = DictParser(text, path).parse();
  if (raw.header.fortran_order) {
    throw Error(ErrorCode::kFortranOrder, "fortran-ordered arrays are not supported: " + path.string());
  }
  if (raw.header.descr != "<f4" && raw.header.descr != "<f8") {
    throw Error(ErrorCode::kUnsupportedDtype,
                "unsupported dtype '" + raw.header.descr + "' in " + path.string());
  }
  for (std::size_t d : raw.header.shape) {
    if (d == 0) malformed(path, "zero-sized dimension");
  }
  if (!with_payload) return raw;
  std::size_t itemsize = raw.header.descr == "<f4" ? 4 : 8;
  std::size_t bytes = shape_numel(raw.header.shape) * itemsize;
  raw.payload.resize(bytes);
  in.read(raw.payload.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) malformed(path, "truncated payload");
  return raw;
}

template <typename Out>
BasicTensor<Out> decode(const RawArray& raw, const std::filesystem::path& path) {
  std::size_t n = shape_numel(raw.header.shape);
  std::vector<Out> data(n);
  if (raw.header.descr == "<f4") {
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, raw.payload.data() + 4 * i, 4);
      data[i] = static_cast<Out>(v);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      std::memcpy(&v, raw.payload.data() + 8 * i, 8);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite, "non-finite value in " + path.string());
      }
      data[i] = static_cast<Out>(v);
    }
  }
  BasicTensor<Out> out(raw.header.shape, std::move(data));
  if (!out.all_finite()) throw Error(ErrorCode::kNonFinite, "non-finite value in " + path.string());
  return out;
}

template <typename T>
void write(const BasicTensor<T>& tensor, const std::filesystem::path& path, const std::string& descr) {
  if (!tensor.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "refusing to write non-finite tensor to " + path.string());
  }
  std::string header = npy_header(descr, tensor.shape());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(kMagic, kMagicLen);
  const char version[2] = {1, 0};
  out.write(version, 2);
  auto len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  auto data = tensor.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

std::string npy_header(const std::string& descr, const Shape& shape) {
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  std::size_t unpadded = kMagicLen + 4 + dict.size() + 1;
  std::size_t total = (unpadded + kAlign - 1) / kAlign * kAlign;
  dict.append(total - unpadded, ' ');
  dict += '\n';
  return dict;
}

Shape read_npy_shape(const std::filesystem::path& path) {
  return read_raw(path, false).header.shape;
}

Tensor load_tensor(const std::filesystem::path& path) {
  return decode<float>(read_raw(path), path);
}

Tensor64 load_tensor64(const std::filesystem::path& path) {
  return decode<double>(read_raw(path), path);
}

void save_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  write(tensor, path, "<f4");
}

void save_tensor(const Tensor64& tensor, const std::filesystem::path& path) {
  write(tensor, path, "<f8");
}

}  // namespace featprobe::io
