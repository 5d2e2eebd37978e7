# Run configuration presets; load with evflex.core.config.load_preset(name)
