#pragma once

#include <cstdint>
#include <string>

#include "dcpa/errors.hpp"

namespace dcpa {

struct TrainConfig {
    int epochs = 351;
    int batch_size = 8;
    int folds = 5;
    double validation_fraction = 0.30;
    double lr = 0.001;
    std::uint64_t seed = 0;
    bool seed_set = false;  // false = draw one and record it
    int threads = 0;        // 0 = hardware concurrency

    void validate() const {
        if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (folds < 2) throw ConfigError("train: folds must be >= 2");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
            throw ConfigError("train: validation_fraction must be in (0,1), got " +
                              std::to_string(validation_fraction));
        }
        if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
        if (threads < 0) throw ConfigError("train: threads must be >= 0");
    }
};

}  // namespace dcpa
