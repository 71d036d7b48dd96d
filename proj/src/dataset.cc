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

#include "apdesc/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "apdesc/error.h"

namespace apdesc {

namespace fs = std::filesystem;

namespace {

constexpr int kUbcTile = 64;
constexpr int kUbcTilesPerSide = 16;
constexpr int kHpatchesSize = 65;

Image ReadGray(const fs::path& path) {
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  Require(!mat.empty(), ErrorCode::kFormat, "cannot read image '" + path.string() + "'");
  Image img(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r)
    for (int c = 0; c < mat.cols; ++c) img.at(r, c) = mat.at<unsigned char>(r, c);
  return img;
}

Image Crop(const Image& src, int top, int left, int size) {
  Image out(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) out.at(r, c) = src.at(top + r, left + c);
  return out;
}

Image Resized(const Image& src, int size) {
  return src.rows == size && src.cols == size ? src : ResizeBilinear(src, size, size);
}

std::string SequenceTag(const std::string& name) {
  if (name.starts_with("v_")) return "viewpoint";
  if (name.starts_with("i_")) return "illumination";
  return "";
}

}  // namespace

const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split ParseSplit(const std::string& name) {
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest})
    if (name == SplitName(s)) return s;
  Fail(ErrorCode::kFormat, "unknown split '" + name + "'");
}

void PatchDataset::Validate() const {
  std::vector<int> patch_owner(patches.size(), -1);
  std::vector<int> group_owner(groups.size(), -1);
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (int g : sequences[s].groups) {
      Require(g >= 0 && g < static_cast<int>(groups.size()), ErrorCode::kFormat,
              "sequence references a missing group");
      Require(group_owner[g] == -1, ErrorCode::kFormat, "group listed in two sequences");
      Require(groups[g].sequence == static_cast<int>(s), ErrorCode::kFormat,
              "group sequence back-reference is inconsistent");
      group_owner[g] = static_cast<int>(s);
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Require(group_owner[g] != -1, ErrorCode::kFormat, "group belongs to no sequence");
    Require(!groups[g].patches.empty(), ErrorCode::kFormat, "empty group");
    for (int p : groups[g].patches) {
      Require(p >= 0 && p < static_cast<int>(patches.size()), ErrorCode::kFormat,
              "group references a missing patch");
      Require(patch_owner[p] == -1, ErrorCode::kFormat, "patch listed in two groups");
      Require(patches[p].group == static_cast<int>(g), ErrorCode::kFormat,
              "patch group back-reference is inconsistent");
      patch_owner[p] = static_cast<int>(g);
    }
  }
  for (std::size_t p = 0; p < patches.size(); ++p) {
    Require(patch_owner[p] != -1, ErrorCode::kFormat, "patch belongs to no group");
    Require(patches[p].image.rows == patch_size() && patches[p].image.cols == patch_size(),
            ErrorCode::kFormat, "patches must share one square size");
  }
}

int PatchDataset::max_group_size() const {
  std::size_t best = 0;
  for (const Group& g : groups) best = std::max(best, g.patches.size());
  return static_cast<int>(best);
}

PatchDataset PatchDataset::Select(const std::set<Split>& splits) const {
  PatchDataset out;
  for (const Sequence& seq : sequences) {
    if (!splits.contains(seq.split)) continue;
    const int s = static_cast<int>(out.sequences.size());
    out.sequences.push_back({seq.name, seq.tag, seq.split, {}});
    for (int g : seq.groups) {
      std::vector<Image> images;
      std::vector<std::string> tiers;
      for (int p : groups[g].patches) {
        images.push_back(patches[p].image);
        tiers.push_back(patches[p].tier);
      }
      AddGroup(out, s, groups[g].label, std::move(images), tiers);
    }
  }
  return out;
}

int AddGroup(PatchDataset& dataset, int sequence, std::int64_t label,
             std::vector<Image> images, const std::vector<std::string>& tiers) {
  Require(sequence >= 0 && sequence < static_cast<int>(dataset.sequences.size()),
          ErrorCode::kFormat, "group added to a missing sequence");
  Require(tiers.empty() || tiers.size() == images.size(), ErrorCode::kFormat,
          "one tier tag per image expected");
  const int g = static_cast<int>(dataset.groups.size());
  Group group{label, sequence, {}};
  for (std::size_t i = 0; i < images.size(); ++i) {
    group.patches.push_back(static_cast<int>(dataset.patches.size()));
    dataset.patches.push_back({std::move(images[i]), g, tiers.empty() ? "" : tiers[i]});
  }
  dataset.groups.push_back(std::move(group));
  dataset.sequences[sequence].groups.push_back(g);
  return g;
}

PatchDataset LoadUbc(const std::string& dir, int target_size) {
  const fs::path root(dir);
  const fs::path index_path = root / "info.txt";
  std::ifstream index(index_path);
  Require(index.good(), ErrorCode::kFormat, "missing index file '" + index_path.string() + "'");
  std::vector<std::int64_t> ids;
  std::string line;
  while (std::getline(index, line)) {
    std::istringstream is(line);
    std::int64_t id;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Require(static_cast<bool>(is >> id), ErrorCode::kFormat,
            index_path.string() + ": bad point id on line " + std::to_string(ids.size() + 1));
    ids.push_back(id);
  }
  Require(!ids.empty(), ErrorCode::kFormat, index_path.string() + ": no patches listed");

  constexpr int per_mosaic = kUbcTilesPerSide * kUbcTilesPerSide;
  const int n = static_cast<int>(ids.size());
  std::vector<Image> images(n);
  for (int m = 0; m * per_mosaic < n; ++m) {
    char name[32];
    std::snprintf(name, sizeof(name), "patches%04d.bmp", m);
    const fs::path path = root / name;
    Require(fs::exists(path), ErrorCode::kFormat,
            "missing mosaic '" + path.string() + "' for patch offset " +
                std::to_string(m * per_mosaic));
    const Image mosaic = ReadGray(path);
    Require(mosaic.rows == kUbcTile * kUbcTilesPerSide && mosaic.cols == mosaic.rows,
            ErrorCode::kFormat, "mosaic '" + path.string() + "' is not 1024x1024");
    for (int t = 0; t < per_mosaic && m * per_mosaic + t < n; ++t) {
      const Image tile =
          Crop(mosaic, (t / kUbcTilesPerSide) * kUbcTile, (t % kUbcTilesPerSide) * kUbcTile,
               kUbcTile);
      images[m * per_mosaic + t] = Resized(tile, target_size);
    }
  }

  PatchDataset ds;
  ds.sequences.push_back({root.filename().string(), "", Split::kTrain, {}});
  std::map<std::int64_t, std::vector<int>> by_id;
  std::vector<std::int64_t> order;
  for (int i = 0; i < n; ++i) {
    auto [it, inserted] = by_id.try_emplace(ids[i]);
    if (inserted) order.push_back(ids[i]);
    it->second.push_back(i);
  }
  for (std::int64_t id : order) {
    std::vector<Image> members;
    for (int i : by_id[id]) members.push_back(std::move(images[i]));
    AddGroup(ds, 0, id, std::move(members));
  }
  ds.Validate();
  return ds;
}

PatchDataset LoadHpatches(const std::string& dir, int target_size,
                          const std::set<std::string>& test_sequences) {
  std::vector<fs::path> seq_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) seq_dirs.push_back(entry.path());
  std::sort(seq_dirs.begin(), seq_dirs.end());
  Require(!seq_dirs.empty(), ErrorCode::kFormat, "no sequence directories in '" + dir + "'");

  PatchDataset ds;
  for (const fs::path& seq_dir : seq_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(seq_dir)) {
      const std::string ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".png" || ext == ".bmp")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) continue;

    std::vector<Image> stacks;
    std::vector<std::string> tiers;
    for (const fs::path& f : files) {
      stacks.push_back(ReadGray(f));
      const Image& s = stacks.back();
      Require(s.cols == kHpatchesSize && s.rows % kHpatchesSize == 0 && s.rows > 0,
              ErrorCode::kFormat, "'" + f.string() + "' is not a stack of 65x65 patches");
      Require(s.rows == stacks.front().rows, ErrorCode::kFormat,
              "stack height of '" + f.string() + "' differs from '" + files.front().string() +
                  "'");
      std::string stem = f.stem().string();
      while (!stem.empty() && std::isdigit(static_cast<unsigned char>(stem.back())))
        stem.pop_back();
      tiers.push_back(stem);
    }

    const std::string name = seq_dir.filename().string();
    const int s = static_cast<int>(ds.sequences.size());
    ds.sequences.push_back({name, SequenceTag(name),
                            test_sequences.contains(name) ? Split::kTest : Split::kTrain, {}});
    const int rows = stacks.front().rows / kHpatchesSize;
    for (int g = 0; g < rows; ++g) {
      std::vector<Image> members;
      for (const Image& stack : stacks)
        members.push_back(Resized(Crop(stack, g * kHpatchesSize, 0, kHpatchesSize), target_size));
      AddGroup(ds, s, g, std::move(members), tiers);
    }
  }
  Require(!ds.sequences.empty(), ErrorCode::kFormat, "no patch files found under '" + dir + "'");
  ds.Validate();
  return ds;
}

namespace {

constexpr char kDatasetMagic[] = "APDESC-DATA 1";

}  // namespace

void SaveDataset(const std::string& path, const PatchDataset& dataset) {
  dataset.Validate();
  std::ostringstream header;
  header << kDatasetMagic << "\n"
         << "patches " << dataset.patches.size() << " " << dataset.patch_size() << "\n"
         << "sequences " << dataset.sequences.size() << "\n";
  for (const Sequence& s : dataset.sequences)
    header << "sequence " << SplitName(s.split) << " " << (s.tag.empty() ? "-" : s.tag) << " "
           << s.name << "\n";
  header << "groups " << dataset.groups.size() << "\n";
  for (const Group& g : dataset.groups) {
    header << "group " << g.sequence << " " << g.label << " " << g.patches.size();
    for (int p : g.patches)
      header << " " << p << ":" << (dataset.patches[p].tier.empty() ? "-" : dataset.patches[p].tier);
    header << "\n";
  }
  header << "end\n";

  std::ofstream os(path, std::ios::binary);
  Require(os.good(), ErrorCode::kFormat, "cannot open '" + path + "' for writing");
  os << header.str();
  std::vector<char> bytes;
  for (const Patch& p : dataset.patches)
    for (double v : p.image.pixels)
      bytes.push_back(static_cast<char>(static_cast<unsigned char>(
          std::clamp(std::lround(v), 0L, 255L))));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  Require(os.good(), ErrorCode::kFormat, "failed writing '" + path + "'");
}

PatchDataset LoadDataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), ErrorCode::kFormat, "cannot open dataset '" + path + "'");
  std::string line, word;
  Require(std::getline(is, line) && line == kDatasetMagic, ErrorCode::kFormat,
          "'" + path + "' is not a dataset container");
  auto next = [&](const std::string& key) {
    Require(static_cast<bool>(std::getline(is, line)), ErrorCode::kFormat,
            path + ": truncated header");
    std::istringstream ls(line);
    Require(ls >> word && word == key, ErrorCode::kFormat,
            path + ": expected '" + key + "', got: " + line);
    return ls;
  };

  std::size_t num_patches = 0;
  int size = 0;
  next("patches") >> num_patches >> size;
  std::size_t num_sequences = 0;
  next("sequences") >> num_sequences;
  PatchDataset ds;
  ds.patches.resize(num_patches);
  for (std::size_t s = 0; s < num_sequences; ++s) {
    auto ls = next("sequence");
    std::string split, tag, name;
    Require(static_cast<bool>(ls >> split >> tag) && std::getline(ls >> std::ws, name),
            ErrorCode::kFormat, path + ": malformed sequence line");
    ds.sequences.push_back({name, tag == "-" ? "" : tag, ParseSplit(split), {}});
  }
  std::size_t num_groups = 0;
  next("groups") >> num_groups;
  for (std::size_t g = 0; g < num_groups; ++g) {
    auto ls = next("group");
    Group group;
    std::size_t members = 0;
    Require(static_cast<bool>(ls >> group.sequence >> group.label >> members),
            ErrorCode::kFormat, path + ": malformed group line");
    Require(group.sequence >= 0 && group.sequence < static_cast<int>(num_sequences),
            ErrorCode::kFormat, path + ": group references a missing sequence");
    for (std::size_t k = 0; k < members; ++k) {
      std::string entry;
      Require(static_cast<bool>(ls >> entry), ErrorCode::kFormat, path + ": short group line");
      const auto colon = entry.find(':');
      Require(colon != std::string::npos, ErrorCode::kFormat, path + ": bad member " + entry);
      const std::size_t p = std::stoull(entry.substr(0, colon));
      Require(p < num_patches, ErrorCode::kFormat, path + ": member index out of range");
      const std::string tier = entry.substr(colon + 1);
      ds.patches[p].group = static_cast<int>(g);
      ds.patches[p].tier = tier == "-" ? "" : tier;
      group.patches.push_back(static_cast<int>(p));
    }
    ds.sequences[group.sequence].groups.push_back(static_cast<int>(g));
    ds.groups.push_back(std::move(group));
  }
  next("end");

  const std::size_t pixels = static_cast<std::size_t>(size) * size;
  std::vector<unsigned char> bytes(num_patches * pixels);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<std::size_t>(is.gcount()) == bytes.size(), ErrorCode::kFormat,
          path + ": pixel block truncated at byte offset " + std::to_string(is.gcount()));
  for (std::size_t p = 0; p < num_patches; ++p) {
    ds.patches[p].image = Image(size, size);
    for (std::size_t i = 0; i < pixels; ++i) ds.patches[p].image.pixels[i] = bytes[p * pixels + i];
  }
  ds.Validate();
  return ds;
}

}  // namespace apdesc
