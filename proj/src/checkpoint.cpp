#include "mvp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mvp {
namespace {

constexpr const char* kMagic = "mvp-checkpoint";
constexpr int kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::string read_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": truncated checkpoint");
  return line;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const PolicyShape& s = checkpoint.params.shape();
  require(checkpoint.params.values().size() == parameter_count(s),
          "checkpoint parameters do not match their shape");
  for (const auto& [key, value] : checkpoint.metadata) {
    require(key.find_first_of(" \n") == std::string::npos && value.find('\n') == std::string::npos,
            "checkpoint metadata must be single-line and keys space-free");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << kMagic << ' ' << kVersion << '\n';
  out << "shape " << s.input_dim << ' ' << s.n_actions << ' ' << s.encoder_units << ' '
      << s.lstm_units << ' ' << (s.relu_encoder ? 1 : 0) << ' '
      << (s.prev_action_in_encoder ? 1 : 0) << '\n';
  for (const auto& [key, value] : checkpoint.metadata) out << "meta " << key << ' ' << value << '\n';
  out << "data\n";
  for (ParamBlock b : kAllParamBlocks) {
    const BlockLayout l = block_layout(s, b);
    out << "tensor " << l.name << ' ' << l.rows << ' ' << l.cols << '\n';
    out.write(reinterpret_cast<const char*>(checkpoint.params.values().data() + l.offset),
              static_cast<std::streamsize>(l.size() * static_cast<Eigen::Index>(sizeof(double))));
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + name + "'");

  {
    std::istringstream magic(read_line(in, name));
    std::string word;
    int version = 0;
    magic >> word >> version;
    require(word == kMagic, name + ": not a checkpoint file");
    require(version == kVersion, name + ": unsupported checkpoint version " + std::to_string(version));
  }

  PolicyShape s;
  {
    std::istringstream line(read_line(in, name));
    std::string word;
    int relu = 1, prev = 0;
    line >> word >> s.input_dim >> s.n_actions >> s.encoder_units >> s.lstm_units >> relu >> prev;
    require(word == "shape" && !line.fail(), name + ": malformed shape line");
    s.relu_encoder = relu != 0;
    s.prev_action_in_encoder = prev != 0;
    validate(s);
  }

  Checkpoint checkpoint;
  checkpoint.params = PolicyParams(s);
  while (true) {
    const std::string line = read_line(in, name);
    if (line == "data") break;
    require(line.rfind("meta ", 0) == 0, name + ": unexpected header line '" + line + "'");
    const std::string rest = line.substr(5);
    const std::size_t space = rest.find(' ');
    require(space != std::string::npos, name + ": malformed meta line");
    checkpoint.metadata[rest.substr(0, space)] = rest.substr(space + 1);
  }

  for (ParamBlock b : kAllParamBlocks) {
    const BlockLayout l = block_layout(s, b);
    std::istringstream header(read_line(in, name));
    std::string word, tensor_name;
    Eigen::Index rows = 0, cols = 0;
    header >> word >> tensor_name >> rows >> cols;
    require(word == "tensor" && tensor_name == l.name && rows == l.rows && cols == l.cols,
            name + ": expected tensor " + std::string(l.name) + " " + std::to_string(l.rows) + "x" +
                std::to_string(l.cols) + ", found " + tensor_name + " " + std::to_string(rows) +
                "x" + std::to_string(cols));
    in.read(reinterpret_cast<char*>(checkpoint.params.values().data() + l.offset),
            static_cast<std::streamsize>(l.size() * static_cast<Eigen::Index>(sizeof(double))));
    require(static_cast<bool>(in) && in.get() == '\n', name + ": truncated tensor " + tensor_name);
  }
  require(checkpoint.params.values().allFinite(), name + ": non-finite parameter values");
  return checkpoint;
}

}  // namespace mvp
