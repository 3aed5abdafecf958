#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pnd/error.hpp"
#include "pnd/features.hpp"

namespace pnd {

// Non-owning row-major matrix.
struct MatrixView {
    std::span<const double> data;
    std::size_t cols = kFeatureCount;

    std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
    std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
    double at(std::size_t i, std::size_t f) const { return data[i * cols + f]; }
};

// Labeled feature matrix; labels are 1 for a pump chunk, 0 otherwise.
class Dataset {
public:
    explicit Dataset(std::size_t cols = kFeatureCount) : cols_(cols) {
        if (cols == 0) throw ContractError("Dataset needs at least one column");
    }

    static Dataset from_rows(const std::vector<FeatureRow>& rows) {
        Dataset d(kFeatureCount);
        d.reserve(rows.size());
        for (const auto& r : rows) d.add_row(r.values, r.label);
        return d;
    }

    void reserve(std::size_t n) {
        values_.reserve(n * cols_);
        labels_.reserve(n);
    }

    void add_row(std::span<const double> x, int label) {
        if (x.size() != cols_)
            throw ContractError("row has " + std::to_string(x.size()) + " columns, dataset has " + std::to_string(cols_));
        if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
        for (double v : x) {
            if (!std::isfinite(v)) throw ValidationError("non-finite feature value in row " + std::to_string(rows()));
        }
        values_.insert(values_.end(), x.begin(), x.end());
        labels_.push_back(static_cast<std::uint8_t>(label));
        (label == 1 ? n_pos_ : n_neg_) += 1;
    }

    void append(const Dataset& other) {
        if (other.cols_ != cols_) throw ContractError("append: column count mismatch");
        values_.insert(values_.end(), other.values_.begin(), other.values_.end());
        labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
        n_pos_ += other.n_pos_;
        n_neg_ += other.n_neg_;
    }

    Dataset subset(std::span<const std::size_t> idx) const {
        Dataset d(cols_);
        d.reserve(idx.size());
        for (auto i : idx) {
            const auto r = row(i);
            d.values_.insert(d.values_.end(), r.begin(), r.end());
            d.labels_.push_back(labels_[i]);
            (labels_[i] ? d.n_pos_ : d.n_neg_) += 1;
        }
        return d;
    }

    std::size_t rows() const { return labels_.size(); }
    std::size_t cols() const { return cols_; }
    std::size_t n_pos() const { return n_pos_; }
    std::size_t n_neg() const { return n_neg_; }
    bool empty() const { return labels_.empty(); }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    double at(std::size_t i, std::size_t f) const { return values_[i * cols_ + f]; }
    int label(std::size_t i) const { return labels_[i]; }

    const std::vector<double>& values() const { return values_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }
    MatrixView matrix() const { return {values_, cols_}; }

    // FNV-1a over the row's bytes and label.
    std::uint64_t row_hash(std::size_t i) const {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        const auto mix = [&h](const void* p, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t k = 0; k < n; ++k) {
                h ^= b[k];
                h *= 0x100000001B3ULL;
            }
        };
        mix(values_.data() + i * cols_, cols_ * sizeof(double));
        mix(&labels_[i], 1);
        return h;
    }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.cols_ == b.cols_ && a.labels_ == b.labels_ && a.values_.size() == b.values_.size() &&
               std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
    }

private:
    std::size_t cols_;
    std::vector<double> values_;
    std::vector<std::uint8_t> labels_;
    std::size_t n_pos_ = 0;
    std::size_t n_neg_ = 0;
};

// Loads and concatenates one or more feature CSVs.
inline Dataset load_feature_dataset(const std::vector<std::string>& paths) {
    Dataset all(kFeatureCount);
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw Error("cannot open feature CSV '" + p + "'");
        try {
            all.append(Dataset::from_rows(read_feature_csv(in)));
        } catch (const Error& e) {
            throw Error(p + ": " + e.what());
        }
    }
    return all;
}

}  // namespace pnd
