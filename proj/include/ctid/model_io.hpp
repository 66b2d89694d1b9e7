#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ctid/additive_model.hpp"
#include "ctid/transfer_function.hpp"

namespace ctid {

/// Model document:
///   {"h": <float, optional>, "submodels": [{"num": [b_0..b_m], "den": [1, a_1..a_n]}, ...]}
/// Coefficients ascending in p; den[0] must equal 1.
struct ModelDocument {
    AdditiveModel model;
    std::optional<double> h;
};

inline nlohmann::json to_json(const AdditiveModel& model) {
    nlohmann::json subs = nlohmann::json::array();
    for (std::size_t i = 0; i < model.subs.size(); ++i) {
        const auto [ni, mi] = model.structure.pairs[i];
        nlohmann::json num = nlohmann::json::array();
        for (int k = 0; k <= mi; ++k) num.push_back(model.subs[i].num.at(k));
        nlohmann::json den = nlohmann::json::array();
        for (int k = 0; k <= ni; ++k) den.push_back(model.subs[i].den.at(k));
        subs.push_back({{"num", std::move(num)}, {"den", std::move(den)}});
    }
    return {{"submodels", std::move(subs)}};
}

inline nlohmann::json to_json(const ModelDocument& doc) {
    nlohmann::json j = to_json(doc.model);
    if (doc.h) j["h"] = *doc.h;
    return j;
}

namespace detail {

inline std::vector<double> json_coeffs(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument(where + " must be a non-empty array of numbers");
    std::vector<double> c;
    c.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw std::invalid_argument(where + " must contain numbers only");
        c.push_back(v.get<double>());
    }
    return c;
}

}  // namespace detail

/// Parses and fully validates a model document (schema, anti-monic
/// denominators, coprimality, at most one biproper submodel).
inline ModelDocument parse_model(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("submodels"))
        throw std::invalid_argument("model document must be an object with a \"submodels\" array");
    const auto& subs_json = j.at("submodels");
    if (!subs_json.is_array() || subs_json.empty())
        throw std::invalid_argument("\"submodels\" must be a non-empty array");

    std::vector<TransferFunction> subs;
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < subs_json.size(); ++i) {
        const auto& s = subs_json[i];
        const std::string where = "submodels[" + std::to_string(i) + "]";
        if (!s.is_object() || !s.contains("num") || !s.contains("den"))
            throw std::invalid_argument(where + " must be an object with \"num\" and \"den\"");
        auto num = detail::json_coeffs(s.at("num"), where + ".num");
        auto den = detail::json_coeffs(s.at("den"), where + ".den");
        if (den[0] != 1.0) throw std::invalid_argument(where + ".den[0] must equal 1");
        pairs.emplace_back(static_cast<int>(den.size()) - 1, static_cast<int>(num.size()) - 1);
        try {
            subs.emplace_back(Polynomial(std::move(num)), Polynomial(std::move(den)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
    }
    ModelDocument doc;
    doc.model = AdditiveModel(std::move(subs), StructureSpec(std::move(pairs)));
    validate_model(doc.model);
    if (j.contains("h")) {
        if (!j.at("h").is_number() || j.at("h").get<double>() <= 0.0)
            throw std::invalid_argument("\"h\" must be a positive number");
        doc.h = j.at("h").get<double>();
    }
    return doc;
}

/// Structure document: either [[n1, m1], [n2, m2], ...] or
/// {"structure": [[n1, m1], ...]}.
inline StructureSpec parse_structure(const nlohmann::json& j) {
    const nlohmann::json* arr = &j;
    if (j.is_object()) {
        if (!j.contains("structure"))
            throw std::invalid_argument("structure document must contain a \"structure\" array");
        arr = &j.at("structure");
    }
    if (!arr->is_array() || arr->empty())
        throw std::invalid_argument("structure must be a non-empty array of [n_i, m_i] pairs");
    std::vector<std::pair<int, int>> pairs;
    for (const auto& e : *arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw std::invalid_argument("each structure entry must be an integer pair [n_i, m_i]");
        pairs.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return StructureSpec(std::move(pairs));
}

inline nlohmann::json to_json(const StructureSpec& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [n, m] : s.pairs) arr.push_back({n, m});
    return arr;
}

}  // namespace ctid
