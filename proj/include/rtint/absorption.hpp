#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rtint {

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

// Piecewise-constant-per-region absorption kappa and scattering albedo a,
// per frequency band. Region ids index into the per-band value tables.
class AbsorptionModel {
public:
    AbsorptionModel() = default;

    AbsorptionModel(std::vector<Band> bands, std::vector<std::vector<double>> kappa,
                    std::vector<std::vector<double>> albedo)
        : bands_(std::move(bands)), kappa_(std::move(kappa)), albedo_(std::move(albedo)) {
        validate();
    }

    int num_bands() const { return static_cast<int>(bands_.size()); }
    int num_regions() const { return bands_.empty() ? 0 : static_cast<int>(kappa_[0].size()); }
    const Band& band(int b) const { return bands_[b]; }
    const std::vector<Band>& bands() const { return bands_; }

    double kappa(int band, int region) const { return kappa_[band][region]; }
    double albedo(int band, int region) const { return albedo_[band][region]; }
    const std::vector<double>& kappa_row(int band) const { return kappa_[band]; }
    const std::vector<double>& albedo_row(int band) const { return albedo_[band]; }

    // Bands sharing identical kappa tables reuse one operator pair; returns for
    // each band the index of the first band with the same kappa row.
    std::vector<int> kappa_group() const {
        std::vector<int> group(bands_.size());
        for (size_t b = 0; b < bands_.size(); ++b) {
            group[b] = static_cast<int>(b);
            for (size_t c = 0; c < b; ++c) {
                if (kappa_[c] == kappa_[b]) {
                    group[b] = static_cast<int>(c);
                    break;
                }
            }
        }
        return group;
    }

private:
    void validate() const {
        if (bands_.empty()) throw std::invalid_argument("AbsorptionModel: no bands");
        if (kappa_.size() != bands_.size() || albedo_.size() != bands_.size())
            throw std::invalid_argument("AbsorptionModel: table sizes do not match bands");
        for (size_t b = 0; b < bands_.size(); ++b) {
            if (!(bands_[b].hi > bands_[b].lo))
                throw std::invalid_argument("AbsorptionModel: empty or inverted band " +
                                            std::to_string(b));
            if (b > 0 && bands_[b].lo < bands_[b - 1].hi)
                throw std::invalid_argument("AbsorptionModel: bands overlap or are unordered");
            if (kappa_[b].size() != kappa_[0].size() || albedo_[b].size() != kappa_[0].size())
                throw std::invalid_argument("AbsorptionModel: ragged region tables");
            for (double k : kappa_[b])
                if (!(k > 0.0))
                    throw std::invalid_argument("AbsorptionModel: kappa must be > 0 in every region");
            for (double a : albedo_[b])
                if (!(a >= 0.0 && a <= 1.0))
                    throw std::invalid_argument("AbsorptionModel: albedo must be in [0,1]");
        }
    }

    std::vector<Band> bands_;
    std::vector<std::vector<double>> kappa_;  // [band][region]
    std::vector<std::vector<double>> albedo_; // [band][region]
};

} // namespace rtint
