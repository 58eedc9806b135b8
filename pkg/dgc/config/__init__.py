"""
Config module for gap-filling settings
"""
from dgc.config.config_manager import ConfigManager

# Create a singleton instance
config_manager = ConfigManager()
