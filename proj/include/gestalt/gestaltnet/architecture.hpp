#ifndef GESTALT_GESTALTNET_ARCHITECTURE_HPP_
#define GESTALT_GESTALTNET_ARCHITECTURE_HPP_

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"
#include "gestalt/nn/layers.hpp"

namespace gestalt {

struct ConvLayerSpec {
  int out_channels = 0;
  int kernel = 3;       // odd; padding = kernel/2 keeps spatial dims
  bool batch_norm = true;
  bool relu = true;
};

/// The region-expert network: ten convolutional layers in five pairs, batch
/// norm and ReLU after every conv except the last, a pooling layer after
/// each pair (max for the first four, average for the fifth), then flatten,
/// a hidden fully-connected layer with ReLU and dropout, and a softmax head
/// sized to the class count.
struct ArchitectureDescriptor {
  int input_side = 100;
  int input_channels = 1;
  std::vector<ConvLayerSpec> convs;
  std::vector<PoolKind> pools;
  int pool_window = 2;
  int pool_stride = 2;
  int hidden_width = 320;
  double dropout_rate = 0.5;
  int head_width = 0;

  /// Default channel progression 32,32,64,64,96,96,128,128,160,160 with 3x3
  /// kernels; override per config.
  static ArchitectureDescriptor standard(int head_width,
                                         std::vector<int> channels = {},
                                         int hidden_width = 320,
                                         int input_side = 100) {
    if (channels.empty())
      channels = {32, 32, 64, 64, 96, 96, 128, 128, 160, 160};
    ArchitectureDescriptor a;
    a.input_side = input_side;
    a.head_width = head_width;
    a.hidden_width = hidden_width;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      const bool last = i + 1 == channels.size();
      a.convs.push_back({channels[i], 3, !last, !last});
    }
    a.pools = {PoolKind::max, PoolKind::max, PoolKind::max, PoolKind::max,
               PoolKind::avg};
    a.validate();
    return a;
  }

  void validate() const {
    if (convs.size() != 10)
      throw InternalError("architecture needs exactly 10 conv layers, got " +
                          std::to_string(convs.size()));
    if (pools.size() != 5)
      throw InternalError("architecture needs exactly 5 pooling layers");
    for (int i = 0; i < 4; ++i)
      if (pools[i] != PoolKind::max)
        throw InternalError("pooling layers 1-4 must be max");
    if (pools[4] != PoolKind::avg)
      throw InternalError("pooling layer 5 must be average");
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const bool last = i + 1 == convs.size();
      if (convs[i].out_channels <= 0 || convs[i].kernel <= 0 ||
          convs[i].kernel % 2 == 0)
        throw InternalError("conv layer " + std::to_string(i) +
                            ": channels must be positive, kernel odd");
      if (last && (convs[i].batch_norm || convs[i].relu))
        throw InternalError("last conv layer must not carry BN/ReLU");
      if (!last && (!convs[i].batch_norm || !convs[i].relu))
        throw InternalError("conv layers 1-9 must carry BN and ReLU");
    }
    if (hidden_width <= 0) throw InternalError("hidden width must be > 0");
    if (head_width <= 0) throw InternalError("head width must be > 0");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw InternalError("dropout rate must be in [0,1)");
    if (input_side <= 0 || input_channels <= 0)
      throw InternalError("input dims must be positive");
    // every pooling stage must see at least one full window
    int side = input_side;
    for (std::size_t p = 0; p < pools.size(); ++p) {
      if (side < pool_window)
        throw InternalError("input side " + std::to_string(input_side) +
                            " too small for 5 pooling stages");
      side = (side - pool_window) / pool_stride + 1;
    }
  }

  /// (channels, height, width) after each stage, input first. Stage labels
  /// come alongside for the conformance report.
  std::vector<std::pair<std::string, std::array<int, 3>>> feature_shapes()
      const {
    std::vector<std::pair<std::string, std::array<int, 3>>> shapes;
    int c = input_channels, side = input_side;
    shapes.push_back({"input", {c, side, side}});
    for (std::size_t i = 0; i < convs.size(); ++i) {
      c = convs[i].out_channels;
      shapes.push_back({"conv" + std::to_string(i), {c, side, side}});
      if (i % 2 == 1) {
        side = (side - pool_window) / pool_stride + 1;
        const std::size_t p = i / 2;
        shapes.push_back({pools[p] == PoolKind::max ? "maxpool" : "avgpool",
                          {c, side, side}});
      }
    }
    shapes.push_back({"flatten", {c * side * side, 1, 1}});
    shapes.push_back({"hidden", {hidden_width, 1, 1}});
    shapes.push_back({"head", {head_width, 1, 1}});
    return shapes;
  }

  std::int64_t flat_features() const {
    const auto shapes = feature_shapes();
    return shapes[shapes.size() - 3].second[0];
  }

  std::string serialize() const {
    std::ostringstream out;
    out << "v1;side=" << input_side << ";in=" << input_channels << ";convs=";
    for (std::size_t i = 0; i < convs.size(); ++i) {
      out << (i ? "," : "") << convs[i].out_channels << ":" << convs[i].kernel
          << ":" << (convs[i].batch_norm ? 1 : 0) << ":"
          << (convs[i].relu ? 1 : 0);
    }
    out << ";pools=";
    for (std::size_t i = 0; i < pools.size(); ++i)
      out << (i ? "," : "") << (pools[i] == PoolKind::max ? "max" : "avg");
    out << ";pw=" << pool_window << ";ps=" << pool_stride
        << ";hidden=" << hidden_width << ";dropout=" << dropout_rate
        << ";head=" << head_width;
    return out.str();
  }

  static ArchitectureDescriptor parse(const std::string& text) {
    ArchitectureDescriptor a;
    a.convs.clear();
    a.pools.clear();
    std::istringstream in(text);
    std::string field;
    bool saw_version = false;
    while (std::getline(in, field, ';')) {
      if (field == "v1") {
        saw_version = true;
        continue;
      }
      const auto eq = field.find('=');
      if (eq == std::string::npos)
        throw ParseError("architecture descriptor field: " + field);
      const std::string key = field.substr(0, eq);
      const std::string val = field.substr(eq + 1);
      if (key == "side") a.input_side = std::stoi(val);
      else if (key == "in") a.input_channels = std::stoi(val);
      else if (key == "pw") a.pool_window = std::stoi(val);
      else if (key == "ps") a.pool_stride = std::stoi(val);
      else if (key == "hidden") a.hidden_width = std::stoi(val);
      else if (key == "dropout") a.dropout_rate = std::stod(val);
      else if (key == "head") a.head_width = std::stoi(val);
      else if (key == "convs") {
        std::istringstream items(val);
        std::string item;
        while (std::getline(items, item, ',')) {
          ConvLayerSpec spec;
          int bn = 0, relu = 0;
          if (std::sscanf(item.c_str(), "%d:%d:%d:%d", &spec.out_channels,
                          &spec.kernel, &bn, &relu) != 4)
            throw ParseError("architecture conv spec: " + item);
          spec.batch_norm = bn != 0;
          spec.relu = relu != 0;
          a.convs.push_back(spec);
        }
      } else if (key == "pools") {
        std::istringstream items(val);
        std::string item;
        while (std::getline(items, item, ','))
          a.pools.push_back(item == "max" ? PoolKind::max : PoolKind::avg);
      } else {
        throw ParseError("architecture descriptor key: " + key);
      }
    }
    if (!saw_version) throw ParseError("architecture descriptor missing version");
    a.validate();
    return a;
  }

  bool operator==(const ArchitectureDescriptor& o) const {
    return serialize() == o.serialize();
  }
};

}  // namespace gestalt

#endif  // GESTALT_GESTALTNET_ARCHITECTURE_HPP_
