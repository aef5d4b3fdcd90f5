#pragma once

#include "wph/analysis.hpp"
#include "wph/config.hpp"
#include "wph/diagram_io.hpp"
#include "wph/error.hpp"
#include "wph/hash.hpp"
#include "wph/image.hpp"
#include "wph/image_io.hpp"
#include "wph/metrics.hpp"
#include "wph/persistence.hpp"
#include "wph/pipeline.hpp"
#include "wph/synthetic.hpp"
#include "wph/vectorizer.hpp"
#include "wph/verify.hpp"
#include "wph/wavelet.hpp"

namespace wph {
inline constexpr const char* kVersion = "0.1.0";
}
