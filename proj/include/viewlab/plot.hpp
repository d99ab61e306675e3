#pragma once

#include <optional>
#include <string>
#include <vector>

#include "viewlab/harness.hpp"

namespace viewlab {

struct PlotOptions {
    std::string title;
    std::vector<double> training_angles;          ///< vertical markers on 1D plots
    const GeneralizationProfile* baseline = nullptr;  ///< gray curve, gap shaded orange
    std::optional<double> chance;                 ///< dashed horizontal line
};

/// Line plot (single axis) or heatmap (two axes) as a standalone SVG
/// document. Output depends only on the inputs.
std::string plot_svg(const GeneralizationProfile& profile, const PlotOptions& options = {});

}  // namespace viewlab
