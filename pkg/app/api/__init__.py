# API module initialization 