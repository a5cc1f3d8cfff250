#include <bit>
#include <cstring>
#include <fstream>

#include "terraseg/png_io.hpp"
#include "terraseg/trainer.hpp"

namespace terraseg {
namespace {

constexpr char kMagic[8] = {'T', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::vector<std::uint8_t> bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + long(pos_), bytes_.begin() + long(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError(path_ + ": truncated checkpoint");
  }
  std::vector<std::uint8_t> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Net& net) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  const auto& s = net.shape();
  for (int v : {s.height, s.width, s.image_channels, s.categories, s.lbp_bins, s.lbp_patch, s.width1, s.width2,
                s.width3})
    put_u32(out, std::uint32_t(v));
  put_u32(out, std::uint32_t(net.params().size()));
  for (const auto& p : net.params()) {
    put_u32(out, std::uint32_t(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put_u32(out, std::uint32_t(p.shape.size()));
    for (int d : p.shape) put_u32(out, std::uint32_t(d));
    put_u32(out, std::uint32_t(p.value.size()));
    for (float v : p.value) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  write_file_atomic(path, out);
}

Net load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open checkpoint");
  Reader r(std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()),
           path.string());
  if (r.str(8) != std::string(kMagic, 8)) throw IoError(path.string() + ": not a checkpoint");
  if (const auto v = r.u32(); v != kVersion)
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
  nn::RefNetShape s;
  for (int* f : {&s.height, &s.width, &s.image_channels, &s.categories, &s.lbp_bins, &s.lbp_patch, &s.width1,
                 &s.width2, &s.width3})
    *f = int(r.u32());
  Net net(s, 0);
  if (r.u32() != net.params().size()) throw IoError(path.string() + ": parameter count mismatch");
  for (auto& p : net.params()) {
    const std::string name = r.str(r.u32());
    if (name != p.name) throw IoError(path.string() + ": expected parameter '" + p.name + "', found '" + name + "'");
    std::vector<int> dims(r.u32());
    for (auto& d : dims) d = int(r.u32());
    if (dims != p.shape) throw IoError(path.string() + ": shape mismatch for '" + name + "'");
    if (r.u32() != p.value.size()) throw IoError(path.string() + ": size mismatch for '" + name + "'");
    for (auto& v : p.value) v = std::bit_cast<float>(r.u32());
  }
  if (!r.done()) throw IoError(path.string() + ": trailing bytes in checkpoint");
  return net;
}

}  // namespace terraseg
