#include "iat/inn/config.hpp"

#include <sstream>

namespace iat::inn {

void ArchitectureConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("architecture: " + what); };
  if (scales < 1 || scales > 4) fail("scales must be in [1, 4]");
  if (blocks_per_scale < 1) fail("blocks_per_scale must be positive");
  if (latent_channels < 1 || inn_channels() % latent_channels != 0) {
    fail("latent_channels must divide " + std::to_string(inn_channels()));
  }
  if (dense_layers < 0 || dense_growth < 1) fail("dense block needs layers >= 0 and growth >= 1");
  if (coupling_hidden < 1 || condition_hidden < 1 || hyper_channels < 1 || hyper_hidden < 1) {
    fail("hidden widths must be positive");
  }
  if (!(coupling_smax > 0)) fail("coupling_smax must be positive");
}

ArchitectureConfig ArchitectureConfig::from(const KeyValues& kv) {
  ArchitectureConfig c;
  c.scales = kv.get_int("scales", c.scales);
  c.blocks_per_scale = kv.get_int("blocks_per_scale", c.blocks_per_scale);
  c.latent_channels = kv.get_int("latent_channels", c.latent_channels);
  c.dense_layers = kv.get_int("dense_layers", c.dense_layers);
  c.dense_growth = kv.get_int("dense_growth", c.dense_growth);
  c.coupling_hidden = kv.get_int("coupling_hidden", c.coupling_hidden);
  c.coupling_smax = kv.get_double("coupling_smax", c.coupling_smax);
  c.condition_hidden = kv.get_int("condition_hidden", c.condition_hidden);
  c.hyper_channels = kv.get_int("hyper_channels", c.hyper_channels);
  c.hyper_hidden = kv.get_int("hyper_hidden", c.hyper_hidden);
  c.qlevel_repr = parse_qlevel_repr(kv.get("qlevel_repr", to_string(c.qlevel_repr)));
  c.validate();
  return c;
}

KeyValues ArchitectureConfig::to_key_values() const {
  KeyValues kv;
  kv.set("scales", std::to_string(scales));
  kv.set("blocks_per_scale", std::to_string(blocks_per_scale));
  kv.set("latent_channels", std::to_string(latent_channels));
  kv.set("dense_layers", std::to_string(dense_layers));
  kv.set("dense_growth", std::to_string(dense_growth));
  kv.set("coupling_hidden", std::to_string(coupling_hidden));
  std::ostringstream smax;
  smax.precision(17);
  smax << coupling_smax;
  kv.set("coupling_smax", smax.str());
  kv.set("condition_hidden", std::to_string(condition_hidden));
  kv.set("hyper_channels", std::to_string(hyper_channels));
  kv.set("hyper_hidden", std::to_string(hyper_hidden));
  kv.set("qlevel_repr", to_string(qlevel_repr));
  return kv;
}

}  // namespace iat::inn
