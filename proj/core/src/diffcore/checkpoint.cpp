#include "ipred/diffcore/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "ipred/error.hpp"

namespace ipred::dc {

namespace {

void put_le(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::string read_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(std::string("checkpoint truncated before ") + what);
  return line;
}

std::string expect_field(const std::string& line, const std::string& key) {
  if (line.rfind(key + " ", 0) != 0) throw FormatError("checkpoint: expected '" + key + "', got '" + line + "'");
  return line.substr(key.size() + 1);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  for (const auto& [k, v] : ckpt.meta)
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos)
      throw InvalidArgument("checkpoint meta entries must be single-line and keys must not contain '='");
  std::ostringstream head;
  head << kCheckpointMagic << '\n';
  head << "method " << ckpt.method << '\n';
  head << "trained " << (ckpt.trained ? 1 : 0) << '\n';
  head << "meta " << ckpt.meta.size() << '\n';
  for (const auto& [k, v] : ckpt.meta) head << k << '=' << v << '\n';
  head << "tensors " << ckpt.params.size() << '\n';
  std::string blob;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const Parameter& p = ckpt.params[i];
    head << p.name << ' ' << p.value.rank();
    for (auto d : p.value.shape()) head << ' ' << d;
    head << ' ' << blob.size() << '\n';
    for (double v : p.value.data()) put_le(blob, v);
  }
  head << "blob " << blob.size() << '\n';
  out << head.str();
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  if (read_line(in, "magic") != kCheckpointMagic) throw FormatError("not an IPMODEL1 checkpoint");
  Checkpoint ckpt;
  ckpt.method = expect_field(read_line(in, "method"), "method");
  ckpt.trained = expect_field(read_line(in, "trained"), "trained") == "1";
  const auto n_meta = std::stoul(expect_field(read_line(in, "meta"), "meta"));
  for (std::size_t i = 0; i < n_meta; ++i) {
    const std::string line = read_line(in, "meta entry");
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: malformed meta line '" + line + "'");
    ckpt.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto n_tensors = std::stoul(expect_field(read_line(in, "tensors"), "tensors"));
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < n_tensors; ++i) {
    std::istringstream ls(read_line(in, "tensor entry"));
    Entry e;
    std::size_t rank = 0;
    if (!(ls >> e.name >> rank) || rank == 0) throw FormatError("checkpoint: malformed tensor entry");
    e.shape.resize(rank);
    for (auto& d : e.shape)
      if (!(ls >> d)) throw FormatError("checkpoint: malformed tensor shape for '" + e.name + "'");
    if (!(ls >> e.offset)) throw FormatError("checkpoint: missing offset for '" + e.name + "'");
    entries.push_back(std::move(e));
  }
  const auto blob_size = std::stoul(expect_field(read_line(in, "blob"), "blob"));
  std::string blob(blob_size, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(blob_size));
  if (static_cast<std::size_t>(in.gcount()) != blob_size) throw FormatError("checkpoint blob truncated");
  for (auto& e : entries) {
    std::size_t count = 1;
    for (auto d : e.shape) count *= d;
    if (e.offset + 8 * count > blob.size()) throw FormatError("checkpoint: tensor '" + e.name + "' exceeds blob");
    std::vector<double> data(count);
    for (std::size_t k = 0; k < count; ++k) data[k] = get_le(blob.data() + e.offset + 8 * k);
    ckpt.params.add(e.name, Tensor(e.shape, std::move(data)));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace ipred::dc
