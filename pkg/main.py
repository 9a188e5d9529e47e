"""
统一入口，单一职责：启动命令行。
用法：
- `python main.py sense-disc --b 0.5,0 --eps 1e-4 -o id.json`
- `python main.py run job.json`
"""

import sys

from app.main import main


if __name__ == "__main__":
    sys.exit(main())
