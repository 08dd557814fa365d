// Copyright (c) 2026 The RexNet Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rexnet/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rexnet/png_io.hpp"
#include "rexnet/tensor.hpp"

namespace rexnet {

namespace fs = std::filesystem;

void save_checkpoint(const std::string& dir, const std::vector<ParamView>& params) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "RXT1";
    manifest["tensors"] = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamView& pv = params[i];
        std::ostringstream file;
        file << "t";
        file.width(4);
        file.fill('0');
        file << i << ".rxt";
        std::vector<std::uint32_t> dims = pv.dims;
        if (dims.empty()) dims = {static_cast<std::uint32_t>(pv.count)};
        write_rxt((fs::path(dir) / file.str()).string(), dims, pv.value, pv.count);
        manifest["tensors"].push_back({{"name", pv.name}, {"file", file.str()}});
    }
    atomic_write_text((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

void load_checkpoint(const std::string& dir, std::vector<ParamView>& params) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("cannot open checkpoint manifest: " + manifest_path.string());
    nlohmann::json manifest;
    is >> manifest;
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.size()) {
        throw std::runtime_error("checkpoint lists " + std::to_string(tensors.size()) +
                                 " tensors, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string name = tensors[i].at("name").get<std::string>();
        if (name != params[i].name) {
            throw std::runtime_error("checkpoint tensor '" + name + "' does not match model '" +
                                     params[i].name + "'");
        }
        std::vector<std::uint32_t> dims;
        std::vector<double> values;
        read_rxt((fs::path(dir) / tensors[i].at("file").get<std::string>()).string(), dims,
                 values);
        if (values.size() != params[i].count) {
            throw std::runtime_error("checkpoint tensor '" + name + "' holds " +
                                     std::to_string(values.size()) + " values, model expects " +
                                     std::to_string(params[i].count));
        }
        std::copy(values.begin(), values.end(), params[i].value);
    }
}

}  // namespace rexnet
