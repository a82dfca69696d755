#include "adlight/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace adlight {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'L', '1'};
constexpr char kOptMagic[4] = {'O', 'P', 'T', '1'};
constexpr std::uint8_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v & 0xffffffffu));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4))
    throw std::runtime_error("checkpoint truncated");
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) |
         (static_cast<std::uint32_t>(buf[3]) << 24);
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t lo = read_u32(is);
  std::uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

double read_f64(std::istream& is) {
  std::uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_tensor(std::ostream& os, const std::string& name,
                  const std::vector<std::uint32_t>& dims, const std::vector<float>& data) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(os, static_cast<std::uint32_t>(dims.size()));
  std::size_t expect = 1;
  for (std::uint32_t d : dims) {
    write_u32(os, d);
    expect *= d;
  }
  if (expect != data.size()) throw std::logic_error("tensor shape/data mismatch");
  // float32 little-endian; raw write is fine on little-endian targets
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(float)));
}

void write_network(std::ostream& os, const NetworkParams& params) {
  write_u32(os, 16);  // tensor count
  params.for_each_layer([&](const char* name, const Linear<float>& l) {
    write_tensor(os, std::string(name) + ".w",
                 {static_cast<std::uint32_t>(l.out), static_cast<std::uint32_t>(l.in)},
                 l.w);
    write_tensor(os, std::string(name) + ".b", {static_cast<std::uint32_t>(l.out)}, l.b);
  });
}

void read_tensor(std::istream& is, const std::string& expected_name,
                 const std::vector<std::uint32_t>& expected_dims,
                 std::vector<float>& data) {
  std::uint32_t name_len = read_u32(is);
  if (name_len > 256) throw std::runtime_error("checkpoint corrupt: bad tensor name");
  std::string name(name_len, '\0');
  if (!is.read(name.data(), name_len)) throw std::runtime_error("checkpoint truncated");
  if (name != expected_name)
    throw std::runtime_error("checkpoint layout mismatch: expected tensor " +
                             expected_name + ", found " + name);
  std::uint32_t ndim = read_u32(is);
  if (ndim != expected_dims.size())
    throw std::runtime_error("checkpoint shape mismatch for " + name);
  std::size_t count = 1;
  for (std::uint32_t expected : expected_dims) {
    std::uint32_t d = read_u32(is);
    // the policy output dimension may vary (action-variant heads)
    if (expected != 0 && d != expected)
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    count *= d;
  }
  data.resize(count);
  if (!is.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(count * sizeof(float))))
    throw std::runtime_error("checkpoint truncated in tensor " + name);
}

NetworkParams read_network(std::istream& is) {
  std::uint32_t tensor_count = read_u32(is);
  if (tensor_count != 16) throw std::runtime_error("checkpoint corrupt: bad tensor count");

  // Peek the policy output width by reading in declared order into a
  // default-shaped network, allowing pol2/pol1-dependent dims to differ.
  NetworkParams params;
  int n_actions = -1;
  params.for_each_layer([&](const char* cname, Linear<float>& l) {
    std::string name(cname);
    std::uint32_t out = static_cast<std::uint32_t>(l.out);
    std::uint32_t in = static_cast<std::uint32_t>(l.in);
    if (name == "pol2") out = 0;  // variable
    read_tensor(is, name + ".w", {out, in}, l.w);
    if (name == "pol2") {
      if (l.w.size() % l.in != 0) throw std::runtime_error("checkpoint corrupt: pol2.w");
      l.out = static_cast<int>(l.w.size()) / l.in;
      n_actions = l.out;
      out = 0;
    }
    read_tensor(is, name + ".b", {out == 0 ? 0u : out}, l.b);
    if (name == "pol2" && static_cast<int>(l.b.size()) != l.out)
      throw std::runtime_error("checkpoint corrupt: pol2.b");
  });
  (void)n_actions;
  return params;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, const OptimizerState& opt,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  os.put(static_cast<char>(kVersion));
  write_network(os, params);
  os.write(kOptMagic, 4);
  write_f64(os, opt.config.learning_rate);
  write_f64(os, opt.config.beta1);
  write_f64(os, opt.config.beta2);
  write_f64(os, opt.config.epsilon);
  write_u64(os, static_cast<std::uint64_t>(opt.step_count));
  write_network(os, opt.m);
  write_network(os, opt.v);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

std::pair<NetworkParams, OptimizerState> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  int version = is.get();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  NetworkParams params = read_network(is);
  char opt_magic[4];
  if (!is.read(opt_magic, 4) || std::memcmp(opt_magic, kOptMagic, 4) != 0)
    throw std::runtime_error("checkpoint missing optimizer block");
  OptimizerState opt(params.n_actions());
  opt.config.learning_rate = read_f64(is);
  opt.config.beta1 = read_f64(is);
  opt.config.beta2 = read_f64(is);
  opt.config.epsilon = read_f64(is);
  opt.step_count = static_cast<std::int64_t>(read_u64(is));
  opt.m = read_network(is);
  opt.v = read_network(is);
  return {std::move(params), std::move(opt)};
}

}  // namespace adlight
