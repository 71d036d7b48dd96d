/*
 * Copyright 2026 The apdesc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "apdesc/checkpoint.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "apdesc/error.h"

namespace apdesc {

namespace {

constexpr char kMagic[] = "APDESC-CKPT 1";

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void WriteLittleEndian(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

double ReadLittleEndian(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void SaveCheckpoint(const std::string& path, const DescriptorModel& model,
                    const ConfigEcho& echo) {
  const ModelConfig& c = model.config();
  std::ostringstream header;
  header << kMagic << "\n"
         << "architecture " << ArchitectureName(c.architecture) << "\n"
         << "head " << HeadName(c.head) << "\n"
         << "output_dim " << c.output_dim << "\n"
         << "patch_size " << c.patch_size << "\n"
         << "hidden_dim " << c.hidden_dim << "\n"
         << "conv_channels1 " << c.conv_channels1 << "\n"
         << "conv_channels2 " << c.conv_channels2 << "\n"
         << "spatial_transformer " << (c.spatial_transformer ? 1 : 0) << "\n"
         << "st_input_size " << c.st.input_size << "\n"
         << "st_output_size " << c.st.output_size << "\n"
         << "st_lr_scale " << FormatDouble(c.st.localization_lr_scale) << "\n"
         << "st_channels1 " << c.st_channels1 << "\n"
         << "st_channels2 " << c.st_channels2 << "\n"
         << "st_channels3 " << c.st_channels3 << "\n"
         << "seed " << model.seed() << "\n"
         << "num_params " << model.num_params() << "\n";
  for (const ParamSegment& s : model.segments())
    header << "segment " << s.name << " " << s.offset << " " << s.size << " "
           << FormatDouble(s.lr_scale) << " " << (s.weight_decay ? 1 : 0) << "\n";
  for (const auto& [key, value] : echo) {
    Require(key.find_first_of(" \n=") == std::string::npos &&
                value.find('\n') == std::string::npos,
            ErrorCode::kFormat, "config echo entries must be single-line key=value pairs");
    header << "echo " << key << "=" << value << "\n";
  }
  header << "end\n";

  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kFormat, "cannot open '" + path + "' for writing");
  os << header.str();
  for (double v : model.params()) WriteLittleEndian(os, v);
  Require(os.good(), ErrorCode::kFormat, "failed writing '" + path + "'");
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kFormat, "cannot open checkpoint '" + path + "'");
  std::string line;
  Require(std::getline(is, line) && line == kMagic, ErrorCode::kFormat,
          "'" + path + "' is not a checkpoint");
  std::map<std::string, std::string> fields;
  ConfigEcho echo;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto space = line.find(' ');
    Require(space != std::string::npos, ErrorCode::kFormat, "malformed header line: " + line);
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    if (key == "echo") {
      const auto eq = value.find('=');
      Require(eq != std::string::npos, ErrorCode::kFormat, "malformed echo line: " + line);
      echo.emplace_back(value.substr(0, eq), value.substr(eq + 1));
    } else if (key != "segment") {
      fields[key] = value;
    }
  }
  Require(ended, ErrorCode::kFormat, "checkpoint header is truncated");

  auto get = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    Require(it != fields.end(), ErrorCode::kFormat, "checkpoint lacks field '" + key + "'");
    return it->second;
  };
  auto get_int = [&](const std::string& key) {
    try {
      return std::stoi(get(key));
    } catch (const std::logic_error&) {
      Fail(ErrorCode::kFormat, "bad integer for '" + key + "'");
    }
  };

  ModelConfig c;
  c.architecture = ParseArchitecture(get("architecture"));
  c.head = ParseHead(get("head"));
  c.output_dim = get_int("output_dim");
  c.patch_size = get_int("patch_size");
  c.hidden_dim = get_int("hidden_dim");
  c.conv_channels1 = get_int("conv_channels1");
  c.conv_channels2 = get_int("conv_channels2");
  c.spatial_transformer = get_int("spatial_transformer") != 0;
  c.st.input_size = get_int("st_input_size");
  c.st.output_size = get_int("st_output_size");
  c.st.localization_lr_scale = std::stod(get("st_lr_scale"));
  c.st_channels1 = get_int("st_channels1");
  c.st_channels2 = get_int("st_channels2");
  c.st_channels3 = get_int("st_channels3");
  const std::uint64_t seed = std::stoull(get("seed"));
  const std::size_t n = std::stoull(get("num_params"));

  std::vector<unsigned char> bytes(n * 8);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<std::size_t>(is.gcount()) == bytes.size(), ErrorCode::kFormat,
          "checkpoint parameter block is truncated");
  std::vector<double> params(n);
  for (std::size_t i = 0; i < n; ++i) params[i] = ReadLittleEndian(&bytes[8 * i]);
  return {DescriptorModel::FromParameters(c, seed, std::move(params)), std::move(echo)};
}

}  // namespace apdesc
