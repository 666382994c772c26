#include "deepcurrents/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "deepcurrents/config.hpp"
#include "deepcurrents/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace deepcurrents {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'C', 'K', 'P', 'T', '0', '1'};

void write_doubles(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* data, std::size_t n, const std::string& source) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
    throw FormatError(source + ": truncated checkpoint payload");
  }
}

}  // namespace

void save_checkpoint(const NeuralCurrent& current, const std::filesystem::path& path) {
  const auto& field = current.field;
  std::vector<std::size_t> loop_sizes;
  for (const auto& loop : current.boundary.loops) loop_sizes.push_back(loop.size());

  const nlohmann::json header = {
      {"field", to_json(field.config())},
      {"rff_seed", field.features().seed},
      {"frequency_rows", field.features().frequencies.rows()},
      {"param_count", field.param_count()},
      {"alpha_scale", current.alpha_scale},
      {"loop_sizes", loop_sizes},
  };
  const std::string text = header.dump();
  const std::uint64_t length = text.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> freq = field.features().frequencies;
  write_doubles(out, freq.data(), static_cast<std::size_t>(freq.size()));
  write_doubles(out, field.params().data(), field.param_count());
  for (const auto& loop : current.boundary.loops) {
    for (const auto& v : loop) write_doubles(out, v.data(), 3);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

NeuralCurrent load_checkpoint(const std::filesystem::path& path) {
  const std::string source = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + source);

  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(source + ": not a checkpoint (bad magic)");
  }
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (in.gcount() != sizeof(length) || length > (1u << 26)) throw FormatError(source + ": bad header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (in.gcount() != static_cast<std::streamsize>(length)) throw FormatError(source + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": header is not valid JSON: " + e.what());
  }

  try {
    FieldConfig config;
    merge_json(config, header.at("field"));
    config.validate();
    const auto rows = header.at("frequency_rows").get<Eigen::Index>();
    const auto count = header.at("param_count").get<std::size_t>();
    if (rows < 0 || count != config.param_count()) throw FormatError(source + ": header sizes are inconsistent");

    FourierFeatures features;
    features.seed = header.at("rff_seed").get<std::uint64_t>();
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> freq(rows, 3);
    read_doubles(in, freq.data(), static_cast<std::size_t>(freq.size()), source);
    features.frequencies = freq;

    Eigen::VectorXd params(static_cast<Eigen::Index>(count));
    read_doubles(in, params.data(), count, source);

    BoundaryCurve boundary;
    for (const auto n : header.at("loop_sizes").get<std::vector<std::size_t>>()) {
      std::vector<Vec3> loop(n);
      for (auto& v : loop) read_doubles(in, v.data(), 3, source);
      boundary.loops.push_back(std::move(loop));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(source + ": trailing bytes after payload");
    return {NeuralField(config, std::move(features), std::move(params)), std::move(boundary),
            header.at("alpha_scale").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": malformed header: " + e.what());
  } catch (const InputError& e) {
    throw FormatError(source + ": " + e.what());
  }
}

}  // namespace deepcurrents
