// The server's /view payload — everything the panels render.

export interface ExecResult {
	status: 'ok' | 'error' | 'timeout';
	stdout: string;
	stderr: string;
	valueRepr: string | null;
	durationMs: number;
	executedVersionNo: number;
}

export interface BlockView {
	id: string;
	kind: 'heading' | 'text' | 'prompt' | 'code';
	level: number;
	content: string;
	createdBy: string;
	authorLast: string;
	sourcePromptId: string | null;
	updatedAt: number;
	execResult: ExecResult | null;
}

export type Badge = [anchorId: string, kind: string, creator: string];

export interface PromptEntry {
	block: string;
	label: string;
	badges: Badge[];
}

export interface TaskNode {
	block: string | null;
	level: number;
	label: string;
	prompts: PromptEntry[];
	children: TaskNode[];
}

export interface AnchorView {
	id: string;
	blockId: string;
	start: number;
	end: number;
	status: 'valid' | 'drifted' | 'orphaned';
	owner: string;
	wholeSection: boolean;
}

export interface LinkView {
	id: string;
	kind: 'refer' | 'request' | 'share' | 'link';
	source: string;
	target: string;
	message: string | null;
	creator: string;
	state: string;
	createdAt: number;
	resolvedAt: number | null;
	epoch: number;
	lastOrigin: string | null;
}

export interface MessageView {
	id: string;
	actionType: string;
	actor: string;
	linkId: string | null;
	blockId: string | null;
	lamport: number;
	seq: number;
	processed: boolean;
}

export interface ViewModel {
	docId: string;
	blocks: BlockView[];
	wiki: TaskNode[];
	anchors: AnchorView[];
	links: LinkView[];
	messages: MessageView[];
	presence: Record<string, Record<string, unknown>>;
	frontier: Record<string, number>;
}

export function emptyView(docId: string): ViewModel {
	return {
		docId,
		blocks: [],
		wiki: [],
		anchors: [],
		links: [],
		messages: [],
		presence: {},
		frontier: {}
	};
}

export interface VersionRecord {
	blockId: string;
	versionNo: number;
	promptText: string;
	codeText: string;
	cause: string;
	actor: string;
	linkId: string | null;
	lamport: number;
	parentVersionNo: number;
	opId: string;
}

export function parseHistory(text: string): VersionRecord[] {
	if (!text.trim()) return [];
	return text
		.split('\n')
		.filter((line) => line.trim())
		.map((line) => JSON.parse(line) as VersionRecord);
}
