#pragma once

#include "idt/model.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace idt {

// Caller-supplied certificate carried in a model file: tensorization constant
// C, balance eta, marginal bound b. Absent fields stay empty.
struct certificate {
    std::optional<double> C;
    std::optional<double> eta;
    std::optional<double> b;
};

struct model_file {
    model_spec model;
    certificate cert;
};

// Throws config_error naming the offending field.
model_file model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const model_spec& m, const certificate& cert = {});

model_file load_model(const std::string& path);
void save_model(const std::string& path, const model_spec& m, const certificate& cert = {});

} // namespace idt
