# Command package marker.
