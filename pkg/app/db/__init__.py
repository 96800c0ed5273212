# Module initialization 