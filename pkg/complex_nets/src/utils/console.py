from colorama import Fore, Style, init

init()

RULE_WIDTH = 50


def info(message: str) -> None:
    print(f"{Fore.CYAN}{message}{Style.RESET_ALL}")


def success(message: str) -> None:
    print(f"{Fore.GREEN}✅ {message}{Style.RESET_ALL}")


def warn(message: str) -> None:
    print(f"{Fore.YELLOW}⚠️  {message}{Style.RESET_ALL}")


def error(message: str) -> None:
    print(f"\n{Fore.RED}❌ Error: {message}{Style.RESET_ALL}")


def highlight(value) -> str:
    return f"{Fore.YELLOW}{value}{Style.RESET_ALL}"


def rule() -> None:
    print("=" * RULE_WIDTH)
