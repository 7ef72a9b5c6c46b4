#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "screenprune/network.hpp"

namespace screenprune {

// Report conventions: "params" counts prunable weight parameters only
// (dense weight entries and conv kernel entries); biases and batchnorm
// scale/shift are never prunable here and are excluded from the counts.

struct LayerCompressionRow {
  std::string name;
  std::size_t original = 0;
  std::size_t kept = 0;
  double kept_percent = 0.0;
};

struct LayerCompressionReport {
  std::vector<LayerCompressionRow> rows;
  LayerCompressionRow total;
};

inline LayerCompressionReport report_layer_compression(const Network& net) {
  LayerCompressionReport report;
  report.total.name = "total";
  std::size_t fc = 0, conv = 0;
  for (const auto& layer : net.layers()) {
    LayerCompressionRow row;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      row.name = "fc" + std::to_string(++fc);
      row.original = d->prunable_count();
      row.kept = d->kept_count();
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      row.name = "conv" + std::to_string(++conv);
      row.original = c->prunable_count();
      row.kept = c->kept_count();
    } else {
      continue;
    }
    row.kept_percent = row.original ? 100.0 * double(row.kept) / double(row.original) : 100.0;
    report.total.original += row.original;
    report.total.kept += row.kept;
    report.rows.push_back(std::move(row));
  }
  report.total.kept_percent =
      report.total.original ? 100.0 * double(report.total.kept) / double(report.total.original)
                            : 100.0;
  return report;
}

inline std::string to_text(const LayerCompressionReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "layer" << std::right << std::setw(12) << "params"
     << std::setw(12) << "kept" << std::setw(10) << "kept%" << "\n";
  auto line = [&](const LayerCompressionRow& r) {
    os << std::left << std::setw(10) << r.name << std::right << std::setw(12) << r.original
       << std::setw(12) << r.kept << std::setw(9) << std::fixed << std::setprecision(2)
       << r.kept_percent << "%\n";
  };
  for (const auto& r : report.rows) line(r);
  line(report.total);
  return os.str();
}

inline std::string to_csv(const LayerCompressionReport& report) {
  std::ostringstream os;
  os << "layer,original_params,kept_params,kept_percent\n";
  auto line = [&](const LayerCompressionRow& r) {
    os << r.name << ',' << r.original << ',' << r.kept << ',' << r.kept_percent << "\n";
  };
  for (const auto& r : report.rows) line(r);
  line(report.total);
  return os.str();
}

struct ChannelRow {
  std::string name;
  std::size_t original = 0;
  std::size_t remaining = 0;
};

inline std::vector<ChannelRow> report_channels_per_layer(const Network& net) {
  std::vector<ChannelRow> rows;
  std::size_t bn = 0;
  for (const auto& layer : net.layers()) {
    const auto* b = std::get_if<BatchNorm2dLayer>(&layer);
    if (!b) continue;
    rows.push_back({"bn" + std::to_string(++bn), b->channels, b->kept_channels()});
  }
  if (rows.empty())
    throw std::invalid_argument("report_channels_per_layer: network has no batchnorm layers");
  return rows;
}

inline std::string channels_to_csv(const std::vector<ChannelRow>& rows) {
  std::ostringstream os;
  os << "layer,original_channels,remaining_channels\n";
  std::size_t orig = 0, rem = 0;
  for (const auto& r : rows) {
    os << r.name << ',' << r.original << ',' << r.remaining << "\n";
    orig += r.original;
    rem += r.remaining;
  }
  os << "total," << orig << ',' << rem << "\n";
  return os.str();
}

struct Histogram {
  std::vector<double> edges;        // bins + 1 edges over [0, max|w|]
  std::vector<std::size_t> counts;  // per bin
};

/// Histogram of the magnitudes of kept nonzero weights (dense weights and
/// conv kernels). Empty histogram when nothing is kept.
inline Histogram report_weight_histogram(const Network& net, std::size_t bins) {
  if (bins < 1) throw std::invalid_argument("report_weight_histogram: bins must be >= 1");
  std::vector<double> values;
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      for (std::size_t i = 0; i < d->weights.size(); ++i)
        if (d->weight_mask[i] != 0.0f && d->weights[i] != 0.0f)
          values.push_back(std::abs(double(d->weights[i])));
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      const std::size_t per_oc = c->in_channels * c->kernel_h * c->kernel_w;
      const std::size_t per_ic = c->kernel_h * c->kernel_w;
      for (std::size_t oc = 0; oc < c->out_channels; ++oc) {
        if (c->out_channel_mask[oc] == 0.0f) continue;
        for (std::size_t ic = 0; ic < c->in_channels; ++ic) {
          if (c->in_channel_mask[ic] == 0.0f) continue;
          for (std::size_t kk = 0; kk < per_ic; ++kk) {
            const float v = c->kernels[oc * per_oc + ic * per_ic + kk];
            if (v != 0.0f) values.push_back(std::abs(double(v)));
          }
        }
      }
    }
  }
  Histogram hist;
  if (values.empty()) return hist;
  double max_v = 0.0;
  for (double v : values) max_v = std::max(max_v, v);
  if (max_v == 0.0) max_v = 1.0;
  hist.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) hist.edges[i] = max_v * double(i) / double(bins);
  hist.counts.assign(bins, 0);
  for (double v : values) {
    std::size_t bin = static_cast<std::size_t>(v / max_v * double(bins));
    if (bin >= bins) bin = bins - 1;
    ++hist.counts[bin];
  }
  return hist;
}

inline std::string histogram_to_csv(const Histogram& hist) {
  std::ostringstream os;
  os << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    os << hist.edges[i] << ',' << hist.edges[i + 1] << ',' << hist.counts[i] << "\n";
  return os.str();
}

/// Emits a dense layer's weight mask as a plain-text portable graymap
/// (P2, maxval 1): rows are the layer's units, columns its inputs.
inline void export_mask_pgm(const Network& net, std::size_t dense_ordinal, std::ostream& os) {
  std::size_t fc = 0;
  for (const auto& layer : net.layers()) {
    const auto* d = std::get_if<DenseLayer>(&layer);
    if (!d) continue;
    if (++fc != dense_ordinal) continue;
    os << "P2\n" << d->in_features << " " << d->out_features << "\n1\n";
    for (std::size_t o = 0; o < d->out_features; ++o) {
      for (std::size_t i = 0; i < d->in_features; ++i) {
        os << (d->weight_mask[o * d->in_features + i] != 0.0f ? 1 : 0);
        os << (i + 1 == d->in_features ? '\n' : ' ');
      }
    }
    return;
  }
  throw std::invalid_argument("export_mask_pgm: no dense layer with ordinal " +
                              std::to_string(dense_ordinal));
}

}  // namespace screenprune
