#pragma once

#include <string>

#include "pcam/generators.hpp"
#include "pcam/pointnet.hpp"

namespace pcam {

/// Checkpoint container: magic "PCKP", version, role tag, architecture
/// descriptor (layer widths), then all parameters in declaration order as
/// little-endian doubles. Loading refuses on architecture or role mismatch.
void save_classifier(const std::string& path, const ClassifierModel& model);
ClassifierModel load_classifier(const std::string& path);

void save_autoencoder(const std::string& path, const AutoencoderModel& model);
AutoencoderModel load_autoencoder(const std::string& path);

void save_discriminator(const std::string& path, const DiscriminatorModel& model);
DiscriminatorModel load_discriminator(const std::string& path);

/// Role tag of a checkpoint file ("classifier" | "ae" | "discriminator").
std::string checkpoint_role(const std::string& path);

}  // namespace pcam
