#include "pnorm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pnorm {

using nlohmann::json;

namespace {

std::vector<double> number_array(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw InputError(std::string("tensor JSON: missing array '") + key + "'");
    std::vector<double> out;
    for (const auto& x : j.at(key)) {
        if (!x.is_number()) throw InputError(std::string("tensor JSON: non-numeric entry in '") + key + "'");
        out.push_back(x.get<double>());
    }
    return out;
}

// Doubles go through format_double so every writer shares one spelling.
std::string number(double x) { return format_double(x); }

std::string number_list(const std::vector<double>& xs) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += number(xs[i]);
    }
    return s + "]";
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

Tensor parse_tensor_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("tensor JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("tensor JSON: top level must be an object");
    if (!j.contains("shape") || !j.at("shape").is_array() || j.at("shape").empty()) {
        throw InputError("tensor JSON: 'shape' must be a nonempty array");
    }
    std::vector<std::size_t> shape;
    std::size_t size = 1;
    for (const auto& d : j.at("shape")) {
        if (!d.is_number_integer() || d.get<long long>() < 1) throw InputError("tensor JSON: dimensions must be positive integers");
        shape.push_back(d.get<std::size_t>());
        size *= shape.back();
    }
    if (!j.contains("field") || !j.at("field").is_string()) throw InputError("tensor JSON: missing 'field'");
    Field field;
    try {
        field = field_from_string(j.at("field").get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("tensor JSON: ") + e.what());
    }
    const auto re = number_array(j, "re");
    if (re.size() != size) throw InputError("tensor JSON: 're' length does not match shape");
    std::vector<double> im(size, 0.0);
    if (j.contains("im")) {
        im = number_array(j, "im");
        if (im.size() != size) throw InputError("tensor JSON: 'im' length does not match shape");
    } else if (field == Field::Complex) {
        throw InputError("tensor JSON: complex field requires 'im'");
    }
    std::vector<Scalar> entries(size);
    for (std::size_t i = 0; i < size; ++i) {
        if (field == Field::Real && im[i] != 0.0) throw InputError("tensor JSON: real field with nonzero imaginary part");
        entries[i] = Scalar(re[i], im[i]);
    }
    return Tensor(std::move(shape), std::move(entries), field);
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tensor_json(ss.str());
}

std::string tensor_to_json(const Tensor& t) {
    std::vector<double> re, im;
    for (const auto& z : t.entries()) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    std::string s = "{\"shape\":[";
    for (std::size_t k = 0; k < t.order(); ++k) {
        if (k) s += ',';
        s += std::to_string(t.dim(k));
    }
    s += "],\"field\":\"" + to_string(t.field()) + "\",\"re\":" + number_list(re);
    if (t.field() == Field::Complex) s += ",\"im\":" + number_list(im);
    return s + "}";
}

std::string result_to_json(const FitResult& r) {
    std::vector<double> mags;
    for (const auto& c : r.coeffs) mags.push_back(std::abs(c));
    std::string s = "{\"norm_estimate\":" + number(r.norm_estimate);
    s += ",\"nuclear_rank\":" + std::to_string(r.nuclear_rank);
    s += ",\"recon_error\":" + number(r.recon_error);
    s += std::string(",\"converged\":") + (r.converged ? "true" : "false");
    s += ",\"restart_index\":" + std::to_string(r.restart_index);
    s += ",\"coeffs_abs\":" + number_list(mags);
    return s + "}";
}

std::string model_snapshot_json(const CpModel& model) {
    std::vector<double> cre, cim;
    for (const auto& c : model.coeffs) {
        cre.push_back(c.real());
        cim.push_back(c.imag());
    }
    std::string s = "{\"tensor\":" + tensor_to_json(reconstruct(model));
    s += ",\"coeffs_re\":" + number_list(cre) + ",\"coeffs_im\":" + number_list(cim) + ",\"cores\":[";
    for (std::size_t j = 0; j < model.cores.size(); ++j) {
        if (j) s += ',';
        s += '[';
        for (std::size_t k = 0; k < model.cores[j].size(); ++k) {
            if (k) s += ',';
            std::vector<double> re, im;
            for (const auto& z : model.cores[j][k].entries()) {
                re.push_back(z.real());
                im.push_back(z.imag());
            }
            s += "{\"re\":" + number_list(re) + ",\"im\":" + number_list(im) + "}";
        }
        s += ']';
    }
    return s + "]}";
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "epoch,total_loss,recon_error,rank_count,norm_sum\n";
    for (const auto& row : trace) {
        out << row.epoch << ',' << number(row.total_loss) << ',' << number(row.recon_error) << ',' << row.rank_count
            << ',' << number(row.norm_sum) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "param1,param2,norm,rank,recon_error,converged\n";
    for (const auto& r : rows) {
        out << number(r.param1) << ',' << number(r.param2) << ',' << number(r.norm) << ',' << r.rank << ','
            << number(r.recon_error) << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace pnorm
