#pragma once

// Checkpoint directory: one RTEN file per state tensor (trainable parameters
// plus batch-norm running statistics), a manifest naming each tensor with its
// dtype and shape, and the model description itself. Round-trips are
// bit-exact because RTEN stores raw little-endian scalars.
//
//   <dir>/manifest.txt
//   <dir>/model.txt
//   <dir>/<param name>.rten

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>

#include "relpv/errors.hpp"
#include "relpv/model_spec.hpp"
#include "relpv/network.hpp"
#include "relpv/rten.hpp"

namespace relpv {

template <typename T>
void save_checkpoint(const std::string& dir, ModelInstance<T>& M) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "relpv-checkpoint 1\n";
    manifest << "dtype " << (std::is_same_v<T, float> ? "f32" : "f64") << "\n";
    for (const ParamRef<T>& p : M.state_tensors()) {
        const std::string file = p.name + ".rten";
        save_rten((fs::path(dir) / file).string(), *p.tensor);
        manifest << "tensor " << p.name << ' ' << file << ' ';
        const Shape& s = p.tensor->shape();
        for (std::size_t i = 0; i < s.size(); ++i) manifest << (i ? "x" : "") << s[i];
        manifest << "\n";
    }
    {
        std::ofstream mf(fs::path(dir) / "manifest.txt", std::ios::trunc);
        mf << manifest.str();
        if (!mf) throw Error("cannot write checkpoint manifest in " + dir);
    }
    save_model_file((fs::path(dir) / "model.txt").string(), M.spec());
}

// Loads a checkpoint into an existing instance. The manifest must cover
// exactly the instance's state tensors with matching shapes.
template <typename T>
void load_checkpoint(const std::string& dir, ModelInstance<T>& M) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.txt");
    if (!mf) throw Error("cannot open checkpoint manifest in " + dir);
    std::string line;
    bool header = false;
    std::map<std::string, std::string> files;  // tensor name -> file
    std::map<std::string, Shape> shapes;
    int lineno = 0;
    while (std::getline(mf, line)) {
        ++lineno;
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        if (!header) {
            if (key != "relpv-checkpoint")
                throw ParameterError("bad checkpoint manifest header in " + dir);
            header = true;
            continue;
        }
        if (key == "dtype") {
            std::string d;
            is >> d;
            const std::string want = std::is_same_v<T, float> ? "f32" : "f64";
            if (d != want)
                throw ParameterError("checkpoint dtype " + d + " does not match model dtype " +
                                     want);
        } else if (key == "tensor") {
            std::string name, file, shape;
            if (!(is >> name >> file >> shape))
                throw ParameterError("bad tensor line " + std::to_string(lineno) +
                                     " in checkpoint manifest");
            files[name] = file;
            Shape s;
            std::size_t pos = 0;
            while (true) {
                std::size_t x = shape.find('x', pos);
                s.push_back(std::stoull(x == std::string::npos ? shape.substr(pos)
                                                               : shape.substr(pos, x - pos)));
                if (x == std::string::npos) break;
                pos = x + 1;
            }
            shapes[name] = std::move(s);
        }
    }
    auto want = M.state_tensors();
    if (files.size() != want.size())
        throw ParameterError("checkpoint has " + std::to_string(files.size()) +
                             " tensors, model expects " + std::to_string(want.size()));
    for (const ParamRef<T>& p : want) {
        auto it = files.find(p.name);
        if (it == files.end())
            throw ParameterError("checkpoint is missing tensor '" + p.name + "'");
        if (shapes[p.name] != p.tensor->shape())
            throw DimensionError("checkpoint tensor '" + p.name + "' has shape " +
                                 shape_to_string(shapes[p.name]) + ", model expects " +
                                 shape_to_string(p.tensor->shape()));
        Tensor<T> t = load_rten<T>((fs::path(dir) / it->second).string());
        if (t.shape() != p.tensor->shape())
            throw DimensionError("checkpoint file for '" + p.name + "' has shape " +
                                 shape_to_string(t.shape()));
        *p.tensor = std::move(t);
    }
}

}  // namespace relpv
