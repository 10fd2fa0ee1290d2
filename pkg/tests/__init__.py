# Test package for downlink_tools
