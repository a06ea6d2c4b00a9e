"""
DroopPlan EXE Builder Script
Run this to create a standalone command-line executable
"""

import PyInstaller.__main__
import sys
import os

# Get the absolute path to the project root
project_root = os.path.dirname(os.path.abspath(__file__))

# PyInstaller arguments
args = [
    'app/main.py',  # Entry point
    '--name=DroopPlan',  # EXE name
    '--onefile',  # Single executable
    '--console',  # Command-line tool
    '--clean',  # Clean cache before building

    # Hidden imports (sometimes needed)
    '--hidden-import=scipy.spatial.transform',
    '--hidden-import=networkx',
    '--hidden-import=cryptography',
    '--hidden-import=matplotlib.backends.backend_svg',

    # Exclude unnecessary modules to reduce size
    '--exclude-module=tkinter',
    '--exclude-module=pandas',
    '--exclude-module=pytest',

    '--noupx',  # Don't use UPX compression (better compatibility)

    # Output directory
    '--distpath=dist',
    '--workpath=build',
    '--specpath=.',
]

print("Building DroopPlan executable...")
print(f"Project root: {project_root}")
print("-" * 50)

try:
    PyInstaller.__main__.run(args)
    print("\n" + "=" * 50)
    print("✓ Build completed successfully!")
    print("✓ EXE location: dist/DroopPlan")
    print("=" * 50)
except Exception as e:
    print(f"\n✗ Build failed: {e}")
    sys.exit(1)
